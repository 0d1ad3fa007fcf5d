#!/usr/bin/env python3
# Copyright 2026 The punctscl Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Runs every punctscl command and validates its JSON output against schemas/."""

import argparse
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource


def load_registry(schema_dir: pathlib.Path) -> Registry:
    resources = []
    for path in sorted(schema_dir.glob("*.schema.json")):
        schema = json.loads(path.read_text())
        resource = Resource.from_contents(schema)
        resources.append((schema["$id"], resource))
        resources.append((path.name, resource))
    return Registry().with_resources(resources)


class Checker:
    def __init__(self, schema_dir: pathlib.Path):
        self.schema_dir = schema_dir
        self.registry = load_registry(schema_dir)
        self.failures = 0

    def check(self, label: str, schema_name: str, document) -> None:
        schema = json.loads((self.schema_dir / schema_name).read_text())
        validator = jsonschema.Draft202012Validator(schema, registry=self.registry)
        errors = sorted(validator.iter_errors(document), key=lambda e: list(e.path))
        if errors:
            self.failures += 1
            for e in errors:
                print(f"FAIL {label}: {'/'.join(map(str, e.path))}: {e.message}")
        else:
            print(f"ok   {label}")

    def reject(self, label: str, schema_name: str, document) -> None:
        schema = json.loads((self.schema_dir / schema_name).read_text())
        validator = jsonschema.Draft202012Validator(schema, registry=self.registry)
        if validator.is_valid(document):
            self.failures += 1
            print(f"FAIL {label}: invalid document accepted")
        else:
            print(f"ok   {label} (rejected)")


def run(cli: str, *args: str, cwd: pathlib.Path, expect: int = 0) -> str:
    proc = subprocess.run([cli, *args], cwd=cwd, capture_output=True, text=True)
    if proc.returncode != expect:
        sys.exit(f"{' '.join(args)} exited {proc.returncode}, expected {expect}\n{proc.stderr}")
    return proc.stdout


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--cli", required=True)
    parser.add_argument("--schemas", required=True, type=pathlib.Path)
    parser.add_argument("--fixtures", required=True, type=pathlib.Path)
    args = parser.parse_args()
    checker = Checker(args.schemas)

    for config in sorted((args.schemas.parent / "configs").glob("*.json")):
        checker.check(f"configs/{config.name}", "run_config.schema.json", json.loads(config.read_text()))
    checker.reject("config with unknown key", "run_config.schema.json", {"model": {"layers": 2}})

    with tempfile.TemporaryDirectory() as tmp:
        work = pathlib.Path(tmp)
        histogram = run(args.cli, "prepare", str(args.fixtures / "prepare_input.txt"), "out.tsv", cwd=work)
        checker.check("prepare histogram", "histogram.schema.json", json.loads(histogram))

        config = {
            "data": {"synth": {"n_tokens": 1500, "n_valid_tokens": 300, "n_test_tokens": 300, "seed": 5}},
            "model": {"model_dim": 8, "n_layers": 1, "n_heads": 2, "ffn_dim": 8, "max_len": 16},
            "train": {"epochs": 2, "batch_size": 8, "max_len": 16},
            "output_dir": "out",
        }
        checker.check("test run config", "run_config.schema.json", config)
        (work / "config.json").write_text(json.dumps(config))
        histograms = json.loads(run(args.cli, "synth", "--config", "config.json", cwd=work))
        for split in ("train", "valid", "test"):
            checker.check(f"synth {split} histogram", "histogram.schema.json", histograms[split])

        records = []
        for seed in ("1", "2"):
            run(args.cli, "train", "--config", "config.json", "--seed", seed, cwd=work)
            record = json.loads((work / "out" / f"run_record_seed{seed}_SCL_COMBINED.json").read_text())
            checker.check(f"run record seed {seed}", "run_record.schema.json", record)
            records.append(record)
        if records[0] == records[1]:
            checker.failures += 1
            print("FAIL two seeds produced identical run records")

        checkpoint = str(work / "out" / "checkpoint_seed1_SCL_COMBINED.bin")
        for flags in ([], ["--diagnose"]):
            report = json.loads(run(args.cli, "eval", checkpoint, str(work / "out" / "test.tsv"), *flags, cwd=work))
            checker.check(f"eval report {' '.join(flags) or 'plain'}", "evaluation_report.schema.json", report)
            if bool(flags) != ("separation" in report):
                checker.failures += 1
                print("FAIL separation block does not follow --diagnose")

        proc = subprocess.run([args.cli, "gradcheck", "--trials", "2"], cwd=work, capture_output=True, text=True)
        oracle = json.loads(proc.stdout)
        checker.check("gradcheck report", "oracle_report.schema.json", oracle)
        if (proc.returncode == 0) != oracle["passed"]:
            checker.failures += 1
            print("FAIL gradcheck exit status disagrees with its report")

    print(f"{checker.failures} schema failure(s)")
    return 1 if checker.failures else 0


if __name__ == "__main__":
    sys.exit(main())
