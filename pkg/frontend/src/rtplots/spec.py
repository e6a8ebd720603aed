"""Plot specifications, loadable from JSON or INI text."""

import configparser
import json
import os
from dataclasses import dataclass, field

KINDS = ("overlay1d", "ap_curves", "heatmap2d", "diffmap2d")


@dataclass
class PlotSpec:
    kind: str
    inputs: list
    output: str
    labels: list = field(default_factory=list)
    title: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"plot kind must be one of {KINDS}, got {self.kind!r}")
        if not self.inputs:
            raise ValueError("a plot spec needs at least one input CSV")
        missing = [p for p in self.inputs if not os.path.exists(p)]
        if missing:
            raise FileNotFoundError(f"input files not found: {missing}")
        if self.labels and len(self.labels) != len(self.inputs):
            raise ValueError("labels, when given, must match the inputs one to one")


def load_spec(path):
    """Load a PlotSpec from a .json file or a .ini/.cfg file with a [plot]
    section (keys: kind, inputs, labels, output, title; lists are
    comma-separated in the INI form). Relative input/output paths are
    resolved against the spec file's directory."""
    base = os.path.dirname(os.path.abspath(path))
    text = open(path).read()
    if path.endswith(".json"):
        raw = json.loads(text)
    else:
        parser = configparser.ConfigParser()
        parser.read_string(text)
        if "plot" not in parser:
            raise ValueError(f"{path} has no [plot] section")
        section = parser["plot"]
        raw = {
            "kind": section.get("kind"),
            "inputs": [p.strip() for p in section.get("inputs", "").split(",") if p.strip()],
            "output": section.get("output"),
            "labels": [p.strip() for p in section.get("labels", "").split(",") if p.strip()],
            "title": section.get("title", ""),
        }

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    return PlotSpec(
        kind=raw["kind"],
        inputs=[resolve(p) for p in raw["inputs"]],
        output=resolve(raw["output"]),
        labels=list(raw.get("labels") or []),
        title=raw.get("title", ""),
    )
