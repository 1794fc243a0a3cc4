"""punprobe: evaluation toolkit for pun recognition, explanation, and generation.

The package is organized as a library of small, mostly pure modules:

- corpus: data model, importers, merge/split/validate
- prompts: template rendering for every task prompt
- gateway: backend execution (HTTP or deterministic mocks), caching, parsing
- textproc / wordmodels: tokenization, lemmas, embeddings, n-gram LM
- recognition: TPR/TNR/accuracy/deltas/Cohen's kappa
- explanation: punchline-check aggregation, Fleiss's kappa, pairwise judging
- generation: ambiguity/distinctiveness/surprise/unusualness, overlap, success
- runner / report: experiment orchestration and report emission
- annotation: HTTP annotation service
"""

__version__ = "0.1.0"
