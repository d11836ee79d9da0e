"""Model backends.

The transformers backend hosts real cross-encoder checkpoints. The stub
backend is a dependency-free, fully deterministic stand-in used for tests
and golden files: probabilities are derived from a content hash of the
input pair, so the same request always yields byte-identical responses.
"""
from __future__ import annotations

import hashlib
import re

_DEONTIC = ("must not", "may not", "must", "shall",
            "is required to", "are required to", "is obliged to")
_QUOTE_RE = re.compile(r'"[^"]*"|“[^”]*”')
_MARKER_RE = re.compile(
    r"\b(" + "|".join(re.escape(m) for m in _DEONTIC) + r")\b", re.IGNORECASE)


class StubModel:
    """Hash-derived probabilities; self-entailment always wins argmax."""

    def __init__(self, name: str, device: str = "cpu"):
        self.name = name

    def nli_batch(self, pairs):
        out = []
        for premise, hypothesis in pairs:
            if premise.strip() == hypothesis.strip():
                out.append((0.90, 0.04, 0.06))
                continue
            digest = hashlib.sha256(
                f"{self.name}\x1f{premise}\x1f{hypothesis}".encode("utf-8")
            ).digest()
            raw = [1 + digest[0], 1 + digest[1], 1 + digest[2]]
            total = sum(raw)
            e, c = raw[0] / total, raw[1] / total
            out.append((e, c, 1.0 - e - c))
        return out

    def obligation_batch(self, sentences):
        out = []
        for s in sentences:
            hit = bool(_MARKER_RE.search(_QUOTE_RE.sub(" ", s)))
            out.append((hit, 0.88 if hit else 0.91))
        return out


class TransformersModel:
    """Sequence-classification checkpoint wrapper (loads at construction)."""

    def __init__(self, name: str, device: str = "cpu"):
        import torch
        from transformers import (AutoModelForSequenceClassification,
                                  AutoTokenizer)
        self.name = name
        self.device = device
        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(name)
        self.model = AutoModelForSequenceClassification.from_pretrained(name)
        self.model.to(device).eval()
        self._nli_order = self._label_indices()

    def _label_indices(self):
        """Map the checkpoint's label layout onto (entail, contra, neutral)."""
        id2label = {int(k): v.lower()
                    for k, v in self.model.config.id2label.items()}
        order = []
        for want in ("entail", "contradict", "neutral"):
            idx = [i for i, lab in id2label.items() if want in lab]
            order.append(idx[0] if idx else None)
        return tuple(order)

    def _probs(self, encoded):
        with self._torch.no_grad():
            logits = self.model(**encoded.to(self.device)).logits
        return self._torch.softmax(logits, dim=-1).cpu().tolist()

    def nli_batch(self, pairs):
        if any(i is None for i in self._nli_order):
            raise RuntimeError(
                f"checkpoint {self.name} does not expose NLI labels")
        encoded = self.tokenizer([p for p, _ in pairs],
                                 [h for _, h in pairs],
                                 padding=True, truncation=True,
                                 return_tensors="pt")
        e_i, c_i, n_i = self._nli_order
        return [(row[e_i], row[c_i], row[n_i]) for row in self._probs(encoded)]

    def obligation_batch(self, sentences):
        encoded = self.tokenizer(list(sentences), padding=True,
                                 truncation=True, return_tensors="pt")
        id2label = {int(k): v.lower()
                    for k, v in self.model.config.id2label.items()}
        positive = next((i for i, lab in id2label.items()
                         if "obligation" in lab and "non" not in lab), 1)
        out = []
        for row in self._probs(encoded):
            conf = row[positive]
            out.append((conf >= 0.5, conf if conf >= 0.5 else 1.0 - conf))
        return out


def build_model(kind: str, name: str, device: str = "cpu"):
    if kind == "stub":
        return StubModel(name, device)
    return TransformersModel(name, device)
