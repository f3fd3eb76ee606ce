from .base import (
    COMPLEXITY_CLASSES,
    Embedder,
    EmbedderDescriptor,
    EmbeddingError,
    FunctionEmbedder,
    check_embedding,
    load_embedding,
    runtime_ratio,
    save_embedding,
    write_embedding,
)
from .deepwalk import DEEPWALK_SPACE, DeepWalk, deepwalk_embed, generate_walks
from .plugin import (
    GCN_SPACE,
    PluginEmbedder,
    PluginError,
    PluginExitError,
    PluginOutputError,
    PluginTimeoutError,
    external_embed,
)
from .spectral import SPECTRAL_SPACE, ConvergenceError, Spectral, spectral_embed, top_eigenpairs

NATIVE = {"deepwalk": DeepWalk, "arope": Spectral, "spectral": Spectral}


def get_embedder(name: str, plugin_cmd=None, timeout=None, space=None) -> Embedder:
    """Resolve an embedder by name; ``plugin_cmd`` selects the subprocess protocol."""
    if plugin_cmd is not None:
        base = {"deepwalk": DEEPWALK_SPACE, "arope": SPECTRAL_SPACE, "spectral": SPECTRAL_SPACE}
        cls = {"deepwalk": "VlogV", "arope": "E_plus_V", "spectral": "E_plus_V"}
        desc = EmbedderDescriptor(name, space or base.get(name, GCN_SPACE),
                                  cls.get(name, "E"), kind="plugin")
        return PluginEmbedder(plugin_cmd, desc, timeout=timeout)
    if name not in NATIVE:
        raise ValueError(f"unknown embedder {name!r}; native: {sorted(NATIVE)}, "
                         "others need a plugin command")
    emb = NATIVE[name]()
    if space is not None:
        emb.descriptor = EmbedderDescriptor(emb.descriptor.name, space,
                                            emb.descriptor.complexity_class)
    return emb
