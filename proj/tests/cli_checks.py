#!/usr/bin/env python3
"""End-to-end checks of the paracon executable: exit codes, report schema,
byte-identical output across runs and execution modes, error reporting."""

import argparse
import json
import pathlib
import subprocess
import sys

try:
    import jsonschema
except ImportError:
    jsonschema = None

failures = []


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def run(cli, *args):
    p = subprocess.run([cli, *map(str, args)], capture_output=True, text=True)
    return p.returncode, p.stdout, p.stderr


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True)
    ap.add_argument("--corpus", required=True, type=pathlib.Path)
    ap.add_argument("--schemas", required=True, type=pathlib.Path)
    ap.add_argument("--work", required=True, type=pathlib.Path)
    a = ap.parse_args()
    a.work.mkdir(parents=True, exist_ok=True)

    validator = None
    if jsonschema is not None:
        schema = json.loads((a.schemas / "report.schema.json").read_text())
        validator = jsonschema.Draft202012Validator(schema)
        mschema = jsonschema.Draft202012Validator(json.loads((a.schemas / "manifest.schema.json").read_text()))
    else:
        print("jsonschema not installed; schema checks skipped")

    def validate(path, what):
        if validator is None:
            return
        errors = list(validator.iter_errors(json.loads(path.read_text())))
        check(not errors, f"{what} matches report schema" + (f": {errors[0].message}" if errors else ""))

    entries = sorted(p for p in a.corpus.iterdir() if (p / "manifest.json").is_file())
    check(len(entries) == 6, "corpus has six entries")
    for entry in entries:
        manifest = entry / "manifest.json"
        expected = json.loads((entry / "expected.json").read_text())
        if validator is not None:
            errs = list(mschema.iter_errors(json.loads(manifest.read_text())))
            check(not errs, f"{entry.name} manifest matches manifest schema")
        par = a.work / f"{entry.name}.parallel.json"
        ser = a.work / f"{entry.name}.serial.json"
        again = a.work / f"{entry.name}.again.json"
        code, _, err = run(a.cli, "analyze", manifest, "--out", par)
        check(code == expected["exit_code"], f"{entry.name} analyze exit {code}, expected {expected['exit_code']}")
        run(a.cli, "analyze", manifest, "--out", again)
        run(a.cli, "analyze", manifest, "--serial", "--out", ser)
        check(par.read_bytes() == again.read_bytes(), f"{entry.name} repeated runs byte-identical")
        check(par.read_bytes() == ser.read_bytes(), f"{entry.name} serial and parallel byte-identical")
        validate(par, f"{entry.name} analyze report")

    sphere = a.corpus / "sphere" / "manifest.json"
    patho = a.corpus / "smooth-pathology" / "manifest.json"
    punct = a.corpus / "punctured-plane" / "manifest.json"

    out = a.work / "global.json"
    code, _, _ = run(a.cli, "global", patho, "--out", out)
    check(code == 2, f"global on smooth-pathology exits 2 (got {code})")
    validate(out, "global report")
    check(json.loads(out.read_text())["global"]["status"] == "not_regular", "pathology status not_regular")

    out = a.work / "flag.json"
    code, _, _ = run(a.cli, "flag", patho, "--point", "0.5", "--out", out)
    rep = json.loads(out.read_text())
    check(code == 0 and rep["trace"]["dims"][-1] == 3, "flag at x=0.5 exits 0 with terminal dim 3")
    validate(out, "flag report")

    out = a.work / "holonomy.json"
    code, _, _ = run(a.cli, "holonomy", punct, "--loop", "unit-circle", "--out", out)
    check(code == 0, f"holonomy on punctured-plane exits 0 (got {code})")
    validate(out, "holonomy report")

    code, text, _ = run(a.cli, "analyze", sphere, "--format", "text", "--out", a.work / "sphere.txt")
    check(code == 0 and "metric" in (a.work / "sphere.txt").read_text(), "text format names the status")

    out = a.work / "steps.json"
    code, _, _ = run(a.cli, "analyze", sphere, "--steps", "512", "--seed", "9", "--out", out)
    rep = json.loads(out.read_text())
    check(rep["effective"]["rk4_steps"] == 512 and rep["effective"]["seed"] == 9, "overrides are echoed")

    bad = a.work / "bad.json"
    doc = json.loads(sphere.read_text())
    doc["connection"]["gamma"][0]["expr"] = "zz * theta"
    bad.write_text(json.dumps(doc))
    code, _, err = run(a.cli, "analyze", bad, "--out", a.work / "bad-out.json")
    check(code == 1 and "/connection/gamma/0/expr" in err, "bad manifest exits 1 naming the field")

    code, _, _ = run(a.cli, "analyze", a.work / "missing.json", "--out", a.work / "x.json")
    check(code == 1, "missing manifest exits 1")

    code, _, _ = run(a.cli, "analyze", sphere, "--steps", "3", "--out", a.work / "x.json")
    check(code != 0, "steps below the minimum are rejected")

    code, stdout, _ = run(a.cli, "corpus", "--id", "sphere")
    check(code == 0 and "PASS" in stdout and "FAIL" not in stdout, "corpus --id sphere passes")

    print(f"{len(failures)} failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
