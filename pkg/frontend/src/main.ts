/**
 * DOM wiring: one task per screen, keyboard-operable slider (native range
 * input), submit on button or Enter. The annotator id comes from the
 * ?annotator= query parameter.
 */

import { CampaignClient } from "./client.js";
import { AnnotationSession } from "./state.js";
import { renderView } from "./render.js";

function requireAnnotatorId(): string | null {
  const params = new URLSearchParams(window.location.search);
  return params.get("annotator");
}

function draw(root: HTMLElement, session: AnnotationSession): void {
  const view = session.view();
  root.innerHTML = renderView(view);

  const slider = root.querySelector<HTMLInputElement>("#score-slider");
  const valueOut = root.querySelector<HTMLOutputElement>("#score-value");
  const submit = root.querySelector<HTMLButtonElement>("#submit-score");
  const retrySubmit = root.querySelector<HTMLButtonElement>("#retry-submit");
  const retryFetch = root.querySelector<HTMLButtonElement>("#retry-fetch");

  if (slider) {
    slider.addEventListener("input", () => {
      session.touch(Number(slider.value));
      if (valueOut) {
        valueOut.textContent = slider.value;
      }
      if (submit) {
        submit.disabled = false;
      }
    });
    slider.addEventListener("keydown", (ev) => {
      if (ev.key === "Enter") {
        ev.preventDefault();
        void session.submit().then(() => draw(root, session));
      }
    });
    slider.focus();
  }
  if (submit) {
    submit.addEventListener("click", () => {
      void session.submit().then(() => draw(root, session));
    });
  }
  if (retrySubmit) {
    retrySubmit.addEventListener("click", () => {
      void session.retrySubmit().then(() => draw(root, session));
    });
  }
  if (retryFetch) {
    retryFetch.addEventListener("click", () => {
      void session.retryFetch().then(() => draw(root, session));
    });
  }
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const annotatorId = requireAnnotatorId();
  if (!annotatorId) {
    root.innerHTML =
      `<p role="alert">Missing annotator id: open this page as ` +
      `<code>/?annotator=YOUR_ID</code>.</p>`;
    return;
  }
  const session = new AnnotationSession(new CampaignClient(""), annotatorId);
  root.innerHTML = `<p class="loading">Loading&hellip;</p>`;
  await session.start();
  draw(root, session);
}

void boot();
