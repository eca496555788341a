"""Speech translation evaluation toolkit.

Resegments system outputs onto a common reference segmentation by minimizing
edit distance, computes chrF and BLEU natively, manages direct-assessment
campaigns (sampling, blind task serving, record logs), and correlates human
with automatic scores across tasks, domains, and languages.
"""

__version__ = "0.1.0"
