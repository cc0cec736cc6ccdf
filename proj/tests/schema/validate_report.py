# Copyright 2026 The panmix Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Checks an ablation report against the JSON schema plus a few cross-field rules."""

import json
import sys

import jsonschema


def main(schema_path, report_path):
    with open(schema_path) as f:
        schema = json.load(f)
    with open(report_path) as f:
        report = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)
    jsonschema.Draft202012Validator(schema).validate(report)
    names = [v["name"] for v in report["variants"]]
    if len(set(names)) != len(names):
        sys.exit("duplicate variant names")
    for v in report["variants"]:
        if v["imix"] != (v["module"] in ("imix", "both")):
            sys.exit(f"{v['name']}: imix flag disagrees with module")
        if v["cda"] != (v["module"] in ("cda", "both")):
            sys.exit(f"{v['name']}: cda flag disagrees with module")
        seeds = [r["seed"] for r in v["rows"]]
        if len(set(seeds)) != len(seeds):
            sys.exit(f"{v['name']}: repeated seed")
        for key, mean in v["mean"].items():
            avg = sum(r[key] for r in v["rows"]) / len(v["rows"])
            if abs(avg - mean) > 1e-4:  # rows and mean are both rounded to 4 places
                sys.exit(f"{v['name']}: mean {key} {mean} != {avg}")
    print(f"ok: {len(names)} variants")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit("usage: validate_report.py SCHEMA REPORT")
    main(sys.argv[1], sys.argv[2])
