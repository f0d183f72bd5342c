"""Linear-chain CRF numerics: forward-backward, Viterbi, likelihood, gradient.

The model is generic over the label set.  Each token carries a bag of
active feature indices; the emission score of label ``y`` at position
``t`` is the sum of ``state_weights[f, y]`` over the active features
``f``, and adjacent labels contribute ``transition_weights[prev, next]``.
All probability computations run in log space.

A training sequence is a pair ``(features, labels)`` where ``features``
is a list of per-token index lists and ``labels`` the gold label indices
(``labels`` may be ``None`` at prediction time).
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .errors import NumericalError

Sequence = tuple[list[list[int]], list[int] | None]


def emission_scores(state_weights: np.ndarray, features: list[list[int]]) -> np.ndarray:
    """Per-position label scores, shape ``(n_tokens, n_labels)``."""
    n_labels = state_weights.shape[1]
    scores = np.zeros((len(features), n_labels))
    for t, active in enumerate(features):
        if active:
            scores[t] = state_weights[active].sum(axis=0)
    return scores


def forward_log_alphas(emissions: np.ndarray, transitions: np.ndarray) -> np.ndarray:
    n = emissions.shape[0]
    alphas = np.empty_like(emissions)
    alphas[0] = emissions[0]
    for t in range(1, n):
        # alphas[t, y] = log sum_y' exp(alphas[t-1, y'] + transitions[y', y]) + em
        alphas[t] = logsumexp(alphas[t - 1][:, None] + transitions, axis=0) + emissions[t]
    return alphas


def backward_log_betas(emissions: np.ndarray, transitions: np.ndarray) -> np.ndarray:
    n = emissions.shape[0]
    betas = np.zeros_like(emissions)
    for t in range(n - 2, -1, -1):
        betas[t] = logsumexp(transitions + (emissions[t + 1] + betas[t + 1])[None, :], axis=1)
    return betas


def log_partition(emissions: np.ndarray, transitions: np.ndarray) -> float:
    return float(logsumexp(forward_log_alphas(emissions, transitions)[-1]))


def sequence_score(
    emissions: np.ndarray, transitions: np.ndarray, labels: list[int]
) -> float:
    score = float(emissions[np.arange(len(labels)), labels].sum())
    for t in range(1, len(labels)):
        score += float(transitions[labels[t - 1], labels[t]])
    return score


def viterbi_decode(emissions: np.ndarray, transitions: np.ndarray) -> list[int]:
    """Highest-scoring label sequence; ties break toward lower label indices."""
    n, _ = emissions.shape
    trellis = np.empty_like(emissions)
    backpointers = np.zeros(emissions.shape, dtype=np.intp)
    trellis[0] = emissions[0]
    for t in range(1, n):
        candidate = trellis[t - 1][:, None] + transitions
        backpointers[t] = candidate.argmax(axis=0)
        trellis[t] = candidate.max(axis=0) + emissions[t]
    path = [int(trellis[-1].argmax())]
    for t in range(n - 1, 0, -1):
        path.append(int(backpointers[t, path[-1]]))
    path.reverse()
    return path


def _sequence_contribution(
    state_weights: np.ndarray,
    transitions: np.ndarray,
    features: list[list[int]],
    labels: list[int],
    grad_state: np.ndarray,
    grad_trans: np.ndarray,
) -> float:
    """Add one sequence's gradient into the accumulators, return its log-likelihood."""
    emissions = emission_scores(state_weights, features)
    alphas = forward_log_alphas(emissions, transitions)
    betas = backward_log_betas(emissions, transitions)
    log_z = float(logsumexp(alphas[-1]))
    if not np.isfinite(log_z):
        raise NumericalError("partition function is not finite")

    # state marginals p(y_t = y | x)
    posteriors = np.exp(alphas + betas - log_z)
    n = len(features)
    for t in range(n):
        active = features[t]
        if active:
            grad_state[active, labels[t]] += 1.0
            grad_state[active] -= posteriors[t]
    # pairwise marginals p(y_{t-1}=a, y_t=b | x)
    for t in range(1, n):
        pair = alphas[t - 1][:, None] + transitions + (emissions[t] + betas[t])[None, :]
        grad_trans -= np.exp(pair - log_z)
        grad_trans[labels[t - 1], labels[t]] += 1.0
    return sequence_score(emissions, transitions, labels) - log_z


def log_likelihood_and_gradient(
    state_weights: np.ndarray,
    transitions: np.ndarray,
    sequences: list[Sequence],
    l2: float = 0.0,
    l2_scale: float = 1.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """L2-penalised conditional log-likelihood and its exact gradient.

    ``l2_scale`` lets mini-batch training charge only a fraction of the
    regulariser per batch so the summed batch objective equals the
    full-data one.  Returns ``(loglik, grad_state, grad_transitions)``.
    """
    grad_state = np.zeros_like(state_weights)
    grad_trans = np.zeros_like(transitions)
    total = 0.0
    for features, labels in sequences:
        if labels is None:
            raise ValueError("training sequences need gold labels")
        total += _sequence_contribution(
            state_weights, transitions, features, labels, grad_state, grad_trans
        )
    if l2:
        lam = l2 * l2_scale
        total -= 0.5 * lam * (float((state_weights**2).sum()) + float((transitions**2).sum()))
        grad_state -= lam * state_weights
        grad_trans -= lam * transitions
    if not np.isfinite(total):
        raise NumericalError("log-likelihood is not finite")
    return total, grad_state, grad_trans
