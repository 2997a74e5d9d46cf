# Copyright (c) 2026, The ProtoML Authors
# SPDX-License-Identifier: Apache-2.0
"""Reference-runtime oracle for generated code.

Usage: harness.py <job.json>

The job names a mode and the generated package directories to exercise.
Results go to stdout as one JSON document.
"""

import importlib
import json
import sys
import time
import traceback


def load_class(root, package, cls):
    if root not in sys.path:
        sys.path.insert(0, root)
    mod = importlib.import_module(package)
    return getattr(mod, cls)


def trainable(module):
    return sum(p.numel() for p in module.parameters() if p.requires_grad)


def run_resnet(job, torch):
    cls = load_class(job["root"], job["package"], job["class"])
    torch.manual_seed(0)
    model = cls().eval()
    x = torch.randn(*job["input_shape"])
    with torch.no_grad():
        y = model(x)
    return {"params": trainable(model), "shape": list(y.shape)}


def run_relu(job, torch):
    cls = load_class(job["root"], job["package"], job["class"])
    model = cls().eval()
    torch.manual_seed(1)
    x = torch.randn(4, 7, 5, 3)
    x[0, 0, 0, 0] = 0.0
    x[0, 0, 0, 1] = -0.0
    x[1, 1, 1, 1] = -1e-30
    x[1, 1, 1, 2] = 1e-30
    with torch.no_grad():
        y = model(x)
    expected = torch.maximum(x, torch.zeros_like(x))
    return {
        "exact": bool(torch.equal(y, expected)),
        "same_dtype": y.dtype == x.dtype,
        "params": trainable(model),
    }


def run_corpus(job, torch):
    out = []
    for case in job["cases"]:
        rec = {"ok": False, "error": "", "shapes": []}
        try:
            cls = load_class(job["root"], case["package"], case["class"])
            torch.manual_seed(0)
            model = cls().eval()
            xs = [torch.randn(*s) for s in case["input_shapes"]]
            with torch.no_grad():
                y = model(*xs)
            ys = y if isinstance(y, tuple) else (y,)
            rec["ok"] = True
            rec["shapes"] = [list(t.shape) for t in ys]
        except (RuntimeError, ValueError, IndexError, TypeError) as e:
            rec["error"] = type(e).__name__ + ": " + str(e).splitlines()[0] if str(e) else type(e).__name__
        out.append(rec)
    return {"cases": out}


def run_loops(job, torch):
    out = []
    for case in job["cases"]:
        looped = load_class(job["root"], case["looped_package"], case["class"])
        unrolled = load_class(job["root"], case["unrolled_package"], case["class"])
        torch.manual_seed(1234)
        a = looped().eval()
        torch.manual_seed(1234)
        b = unrolled().eval()
        torch.manual_seed(99)
        x = torch.randn(*case["input_shape"])
        with torch.no_grad():
            ya = a(x)
            yb = b(x)
        out.append({
            "k": case["k"],
            "params_looped": trainable(a),
            "params_unrolled": trainable(b),
            "equal": bool(torch.equal(ya, yb)),
        })
    return {"cases": out}


def run_cond(job, torch):
    out = []
    for case in job["cases"]:
        cls = load_class(job["root"], case["package"], case["class"])
        for flag in (True, False):
            torch.manual_seed(7)
            model = cls(**{case["flag"]: flag}).eval()
            torch.manual_seed(8)
            x = torch.randn(*case["input_shape"])
            true_mod = getattr(model, case["true_attr"])
            else_mod = getattr(model, case["else_attr"]) if case.get("else_attr") else None
            with torch.no_grad():
                y = model(x)
                if flag:
                    expected = torch.nn.functional.linear(x, true_mod.weight, true_mod.bias)
                elif else_mod is not None:
                    expected = torch.nn.functional.linear(x, else_mod.weight, else_mod.bias)
                else:
                    expected = x
            names = sorted(n for n, _ in model.named_parameters())
            out.append({
                "name": case["name"],
                "flag": flag,
                "equal": bool(torch.equal(y, expected)),
                "params": trainable(model),
                "param_names": names,
            })
    return {"cases": out}


MODES = {
    "resnet": run_resnet,
    "relu": run_relu,
    "corpus": run_corpus,
    "loops": run_loops,
    "cond": run_cond,
}


def main():
    with open(sys.argv[1]) as f:
        job = json.load(f)
    start = time.time()
    try:
        import torch

        torch.set_num_threads(max(1, min(4, torch.get_num_threads())))
        result = MODES[job["mode"]](job, torch)
        result["status"] = "ok"
    except Exception:
        result = {"status": "error", "error": traceback.format_exc()}
    result["seconds"] = time.time() - start
    json.dump(result, sys.stdout)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
