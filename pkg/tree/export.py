"""Export JSON (rechargeable) et DOT d'un arbre multi-branches."""
import json
import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from preprocessing.dataset import BinSpec, EncodingSchema, apply_cumulative_binning, format_interval, make_bin_spec
from tree.multiway_tree import MultiwayTree, TreeRule, TrieNode, build_trie, make_tree
from utils.constants import TREE_SCHEMA_VERSION
from utils.errors import ConfigError

logger = logging.getLogger(__name__)


def _finite_or_none(value: float) -> Optional[float]:
    return None if np.isinf(value) else float(value)


def condition_text(schema: EncodingSchema, feature: int, codes: Sequence[int]) -> str:
    """Libellé lisible d'une condition; les codes contigus d'une feature discrétisée forment un intervalle."""
    name = schema.feature_names[feature]
    codes = sorted(codes)
    spec = schema.bin_specs[feature]
    levels = schema.levels[feature]
    if levels is None and spec is not None and codes == list(range(codes[0], codes[-1] + 1)):
        lo = spec.base_interval(codes[0])[0]
        hi = spec.base_interval(codes[-1])[1]
        return f"{name} in {format_interval(lo, hi)}"
    values = schema.describe_codes(feature, codes)
    if len(values) == 1:
        return f"{name}={values[0]}"
    return f"{name} in {{{', '.join(values)}}}"


def _label_name(tree: MultiwayTree, schema: EncodingSchema, label: float) -> str:
    if tree.is_classification and schema.classes:
        return schema.classes[int(label)]
    return f"{label:.6g}"


# ============================================================================
# JSON
# ============================================================================

def _spec_document(spec: Optional[BinSpec]) -> Optional[Dict]:
    if spec is None:
        return None
    return {
        "kind": spec.kind,
        "thresholds": list(spec.thresholds),
        "intervals": [[_finite_or_none(lo), _finite_or_none(hi)] for lo, hi in spec.intervals],
    }


def _spec_from_document(feature: int, document: Optional[Dict]) -> Optional[BinSpec]:
    if document is None:
        return None
    spec = make_bin_spec(feature, document["thresholds"])
    if document.get("kind") == "cumulative":
        spec = apply_cumulative_binning(spec)
    return spec


def to_json(tree: MultiwayTree, schema: EncodingSchema) -> str:
    """Document versionné: schéma d'encodage, règles ordonnées, repli."""
    document = {
        "version": TREE_SCHEMA_VERSION,
        "task": tree.task,
        "label": schema.label_name,
        "classes": list(schema.classes),
        "features": [
            {
                "name": schema.feature_names[f],
                "kind": schema.feature_kinds[f],
                "levels": schema.levels[f],
                "bin_spec": _spec_document(schema.bin_specs[f]),
            }
            for f in range(schema.n_features)
        ],
        "feature_order": [schema.feature_names[f] for f in tree.feature_order],
        "depth": tree.depth,
        "leaves": tree.leaves,
        "rules": [
            {
                "conditions": [
                    {
                        "feature": schema.feature_names[f],
                        "codes": sorted(codes),
                        "text": condition_text(schema, f, codes),
                    }
                    for f, codes in rule.conditions
                ],
                "label": rule.label,
                "label_name": _label_name(tree, schema, rule.label),
                "pool_index": rule.pool_index,
                "support": rule.support,
            }
            for rule in tree.rules
        ],
        "fallback": tree.fallback_label,
        "fallback_name": _label_name(tree, schema, tree.fallback_label),
    }
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def load_tree(text: str) -> Tuple[MultiwayTree, EncodingSchema]:
    """Inverse de to_json."""
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Modèle illisible: {e}")
    if document.get("version") != TREE_SCHEMA_VERSION:
        raise ConfigError(f"Version de modèle non supportée: {document.get('version')}")

    features = document["features"]
    names = [feature["name"] for feature in features]
    schema = EncodingSchema(
        feature_names=names,
        feature_kinds=[feature["kind"] for feature in features],
        levels=[feature["levels"] for feature in features],
        bin_specs=[_spec_from_document(f, feature["bin_spec"]) for f, feature in enumerate(features)],
        label_name=document["label"],
        task=document["task"],
        classes=list(document["classes"]),
    )
    index = {name: f for f, name in enumerate(names)}
    rules = [
        TreeRule(
            conditions=tuple(
                (index[c["feature"]], frozenset(int(code) for code in c["codes"])) for c in rule["conditions"]
            ),
            label=float(rule["label"]),
            pool_index=int(rule["pool_index"]),
            support=int(rule.get("support", 0)),
        )
        for rule in document["rules"]
    ]
    tree = make_tree(
        rules,
        float(document["fallback"]),
        [index[name] for name in document["feature_order"]],
        task=document["task"],
        depth=document.get("depth"),
        leaves=document.get("leaves"),
    )
    return tree, schema


# ============================================================================
# DOT
# ============================================================================

def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def to_dot(tree: MultiwayTree, schema: EncodingSchema) -> str:
    """Vue en arbre: une boîte par feature testée, une arête par condition («any» pour SKIP)."""
    lines = ["digraph omt {", "  node [shape=box];"]
    counter = [0]

    def visit(node: TrieNode) -> str:
        node_id = f"n{counter[0]}"
        counter[0] += 1
        if node.children:
            title = schema.feature_names[node.feature]
            if node.label is not None:
                title += f"\n→ {_label_name(tree, schema, node.label)}"
            lines.append(f"  {node_id} [label={_quote(title)}];")
        else:
            label = tree.fallback_label if node.label is None else node.label
            lines.append(f"  {node_id} [label={_quote(_label_name(tree, schema, label))}, shape=ellipse];")
        for codes, child in node.children.items():
            child_id = visit(child)
            edge = "any" if codes is None else condition_text(schema, node.feature, codes)
            lines.append(f"  {node_id} -> {child_id} [label={_quote(edge)}];")
        return node_id

    visit(build_trie(tree))
    lines.append("}")
    return "\n".join(lines) + "\n"


def export(tree: MultiwayTree, schema: EncodingSchema, fmt: str = "json") -> str:
    if fmt == "json":
        return to_json(tree, schema)
    if fmt == "dot":
        return to_dot(tree, schema)
    raise ConfigError(f"Format d'export inconnu: {fmt}")
