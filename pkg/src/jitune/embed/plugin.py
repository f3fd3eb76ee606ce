"""File-based protocol for embedders that live in another process.

The child is run as ``<cmd> --graph G --config C --output O``. ``G`` is an
edge list; labels and attributes, when present, sit next to it as
``graph.labels`` and ``graph.attrs``. ``C`` holds ``key=value`` lines (the
configuration plus ``num_nodes``, since trailing isolated nodes do not show
up in the edge list) and the child must write ``node v1 ... vd`` rows to ``O`` and exit 0.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from ..graph import Graph, GraphFormatError, save_graph
from ..space import Categorical, HyperparameterSpace, Numeric
from .base import Embedder, EmbedderDescriptor, EmbeddingError, check_embedding, load_embedding


class PluginError(EmbeddingError):
    kind = "plugin"


class PluginExitError(PluginError):
    kind = "exit"

    def __init__(self, returncode: int, stderr: str):
        self.returncode = returncode
        self.stderr = stderr
        tail = stderr.strip().splitlines()[-1] if stderr.strip() else ""
        super().__init__(f"plugin exited with status {returncode}: {tail}")


class PluginTimeoutError(PluginError):
    kind = "timeout"


class PluginOutputError(PluginError):
    kind = "output"


GCN_SPACE = HyperparameterSpace((
    Numeric("epochs", 10, 300, integer=True),
    Numeric("hidden", 2, 64, integer=True),
    Numeric("learning_rate", 1e-4, 0.1, log_scale=True),
    Numeric("dropout", 0.1, 0.9),
    Numeric("weight_decay", 1e-5, 1e-3, log_scale=True),
    Categorical("model", ("gcn", "gcn_cheby", "dense")),
))


def write_config(config: Mapping[str, Any], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(config):
            value = config[key]
            fh.write(f"{key}={value!r}\n" if isinstance(value, float) else f"{key}={value}\n")


def read_config(path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                key, _, value = line.partition("=")
                out[key.strip()] = value.strip()
    return out


def external_embed(graph: Graph, config: Mapping[str, Any], command: str | Sequence[str],
                   workdir=None, timeout: float | None = None) -> np.ndarray:
    """Run a plugin embedder in a child process and read back its embedding."""
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    base = workdir or os.environ.get("JITUNE_WORKDIR")
    if base is not None:
        Path(base).mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(prefix="plugin-", dir=base) as tmp:
        tmp = Path(tmp)
        graph_path = tmp / "graph.edges"
        save_graph(graph, graph_path, tmp / "graph.labels", tmp / "graph.attrs")
        config_path = tmp / "config.txt"
        write_config({**config, "num_nodes": graph.node_count}, config_path)
        out_path = tmp / "embedding.txt"
        try:
            proc = subprocess.run(
                argv + ["--graph", str(graph_path), "--config", str(config_path),
                        "--output", str(out_path)],
                capture_output=True, text=True, timeout=timeout, cwd=tmp,
            )
        except subprocess.TimeoutExpired as exc:
            raise PluginTimeoutError(f"plugin timed out after {exc.timeout}s") from None
        except OSError as exc:
            raise PluginExitError(127, str(exc)) from None
        if proc.returncode != 0:
            raise PluginExitError(proc.returncode, proc.stderr)
        if not out_path.exists():
            raise PluginOutputError("plugin wrote no embedding file")
        try:
            matrix = load_embedding(out_path, graph.node_count)
        except GraphFormatError as exc:
            raise PluginOutputError(f"incomplete or malformed embedding: {exc}") from None
        try:
            return check_embedding(matrix, graph.node_count)
        except EmbeddingError as exc:
            raise PluginOutputError(str(exc)) from None


class PluginEmbedder(Embedder):
    def __init__(self, command: str | Sequence[str], descriptor: EmbedderDescriptor | None = None,
                 timeout: float | None = None, workdir=None, defaults=None):
        self.command = command
        self.descriptor = descriptor or EmbedderDescriptor("gcn", GCN_SPACE, "E", kind="plugin")
        self.timeout = timeout
        self.workdir = workdir
        self.defaults = dict(defaults or {})

    def embed(self, graph, config, seed=0):
        return external_embed(graph, {**config, "seed": seed}, self.command, self.workdir,
                              self.timeout)
