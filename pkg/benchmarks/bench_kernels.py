#!/usr/bin/env python3
"""Compare the compiled and numpy kernel backends on training-shaped work.

Times one forward plus one masked backward pass through a standard network
(5 hidden layers, 150 neurons) across batch sizes, and reports the per-step
time of each backend. Run after installing the package:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from gradlens import kernels
from gradlens.lens import NetworkSpec, init_params, network_backward_batch, network_forward_batch
from gradlens.masks import sample_masks
from gradlens.stochastics import Rng


def time_step(backend, spec, params, x, plan, repeats):
    saved = kernels.forward_batch, kernels.backward_batch
    kernels.forward_batch = backend.forward_batch
    kernels.backward_batch = backend.backward_batch
    try:
        grad = np.ones((x.shape[0], spec.output_dim))
        # warm up
        out, tape = network_forward_batch(spec, params, x)
        network_backward_batch(spec, params, tape, grad, plan)
        start = time.perf_counter()
        for _ in range(repeats):
            out, tape = network_forward_batch(spec, params, x)
            network_backward_batch(spec, params, tape, grad, plan)
        return (time.perf_counter() - start) / repeats
    finally:
        kernels.forward_batch, kernels.backward_batch = saved


def main():
    try:
        compiled_backend = kernels.get_backend("compiled")
    except ValueError:
        print("compiled backend not available; build the extension first "
              "(pip install -e . --no-build-isolation)")
        return
    numpy_backend = kernels.get_backend("numpy")

    rng = Rng(0)
    spec = NetworkSpec(input_dim=11, output_dim=1, hidden_layers=5, hidden_width=150)
    params = init_params(spec, rng.substream("init"))
    plan = sample_masks(spec, 0.9, rng.substream("masks"))

    print(f"{'batch':>6} {'numpy us':>12} {'compiled us':>12} {'speedup':>8}")
    for batch in (1, 16, 64, 256):
        x = rng.substream("x", batch).gen.normal(0.0, 1.0, (batch, spec.input_dim))
        repeats = max(20, 2000 // batch)
        t_np = time_step(numpy_backend, spec, params, x, plan, repeats)
        t_c = time_step(compiled_backend, spec, params, x, plan, repeats)
        print(f"{batch:>6} {t_np * 1e6:>12.1f} {t_c * 1e6:>12.1f} {t_np / t_c:>8.2f}x")


if __name__ == "__main__":
    main()
