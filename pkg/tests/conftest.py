"""Shared loaders for the committed corpus.

Loaders re-parse on every call instead of caching parsed values: tests that
register extra behaviors into a catalog or tweak a model must never see each
other's edits.  Parsing the whole corpus takes a few milliseconds.
"""

from __future__ import annotations

import json
from pathlib import Path

from tmkit import SimConfig, Simulation, parse_events, parse_model

TESTS_DIR = Path(__file__).resolve().parent
REPO_DIR = TESTS_DIR.parent
CORPUS_DIR = REPO_DIR / "corpus"
INVALID_DIR = TESTS_DIR / "data" / "invalid"


def corpus_text(rel: str) -> str:
    return (CORPUS_DIR / rel).read_text(encoding="utf-8")


def load_model(rel: str):
    return parse_model(corpus_text(rel)).unwrap()


def load_catalog(rel: str, model):
    return parse_events(corpus_text(rel), model).unwrap()


def load_config(rel: str) -> SimConfig:
    return SimConfig.from_document(json.loads(corpus_text(rel)))


def load_sim(model_rel: str, events_rel: str, behavior: str, config_rel: str = None):
    model = load_model(model_rel)
    catalog = load_catalog(events_rel, model)
    config = load_config(config_rel) if config_rel is not None else None
    return Simulation(model, catalog, behavior, config)
