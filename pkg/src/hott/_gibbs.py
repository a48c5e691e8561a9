"""Compiled inner loops of the collapsed Gibbs sampler.

Uniform draws are generated by the caller (numpy Generator) and passed in,
so results are bit-identical with or without the JIT.
"""
import numpy as np

from ._jit import njit


@njit(cache=True, nogil=True)
def gibbs_sweep(words, docs, z, n_dk, n_kw, n_k, alpha, beta, vbeta, uniforms):
    T = n_k.shape[0]
    weights = np.empty(T)
    for t in range(words.shape[0]):
        w = words[t]
        d = docs[t]
        k = z[t]
        n_dk[d, k] -= 1
        n_kw[k, w] -= 1
        n_k[k] -= 1
        total = 0.0
        for j in range(T):
            total += (n_dk[d, j] + alpha) * (n_kw[j, w] + beta) / (n_k[j] + vbeta)
            weights[j] = total
        target = uniforms[t] * total
        k = T - 1
        for j in range(T):
            if target < weights[j]:
                k = j
                break
        z[t] = k
        n_dk[d, k] += 1
        n_kw[k, w] += 1
        n_k[k] += 1


@njit(cache=True, nogil=True)
def fold_in_sweep(words, z, n_k_doc, phi, alpha, uniforms):
    """One sweep over a single held-out document with topic-word weights fixed."""
    T = n_k_doc.shape[0]
    weights = np.empty(T)
    for t in range(words.shape[0]):
        w = words[t]
        k = z[t]
        n_k_doc[k] -= 1
        total = 0.0
        for j in range(T):
            total += (n_k_doc[j] + alpha) * phi[j, w]
            weights[j] = total
        target = uniforms[t] * total
        k = T - 1
        for j in range(T):
            if target < weights[j]:
                k = j
                break
        z[t] = k
        n_k_doc[k] += 1
