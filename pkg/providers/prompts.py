"""
Prompt Library - Versioned Prompt Templates
===========================================

Templates live in ``providers/prompts/<version>/*.txt`` and use ``{name}``
placeholders. Templates contain literal JSON braces, so rendering replaces
only the known placeholders instead of using str.format.
"""

import os
import logging
from typing import Dict, List, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

PROMPT_ROOT = os.path.join(os.path.dirname(__file__), "prompts")
DEFAULT_VERSION = "v1"

TEMPLATE_NAMES = (
    "planner_system", "planner_user",
    "observer_system", "observer_user",
    "timeline_system", "timeline_user",
    "answer_system", "answer_user",
)


def format_query_with_options(query: str, options: Optional[Sequence[str]] = None) -> str:
    """Question followed by lettered options, one per line"""
    lines = [query.strip()]
    for i, option in enumerate(options or []):
        lines.append(f"{chr(ord('A') + i)}. {option.strip()}")
    return "\n".join(lines)


class PromptLibrary:
    """Loads and renders one version of the prompt templates"""

    def __init__(self, version: str = DEFAULT_VERSION, root: str = PROMPT_ROOT):
        self.version = version
        self.directory = os.path.join(root, version)
        self.templates: Dict[str, str] = {}
        for name in TEMPLATE_NAMES:
            path = os.path.join(self.directory, f"{name}.txt")
            with open(path, 'r', encoding='utf-8') as f:
                text = f.read()
            self.templates[name] = text[:-1] if text.endswith("\n") else text
        logger.debug(f"Loaded {len(self.templates)} prompt templates ({version})")

    @staticmethod
    def fill(template: str, **values: str) -> str:
        for key, value in values.items():
            template = template.replace("{" + key + "}", value)
        return template

    def planner(self, query: str, options: Optional[Sequence[str]] = None) -> Tuple[str, str]:
        return (
            self.templates["planner_system"],
            self.fill(self.templates["planner_user"], query=format_query_with_options(query, options)),
        )

    def observer(self, query: str, focus_keywords: Sequence[str],
                 focus_semantic_queries: Sequence[str]) -> Tuple[str, str]:
        return (
            self.templates["observer_system"],
            self.fill(
                self.templates["observer_user"],
                query=query,
                focus_keywords=", ".join(focus_keywords),
                focus_semantic_queries="; ".join(focus_semantic_queries),
            ),
        )

    def timeline(self, duration: float, frame_times: Sequence[float]) -> Tuple[str, str]:
        return (
            self.templates["timeline_system"],
            self.fill(
                self.templates["timeline_user"],
                duration=f"{duration:.1f}",
                frame_times=", ".join(f"{t:.1f}" for t in frame_times),
            ),
        )

    def answer(self, frame_info: str, query: str, options: Optional[Sequence[str]] = None,
               criteria: str = "correct") -> Tuple[str, str]:
        return (
            self.fill(self.templates["answer_system"], criteria=criteria),
            self.fill(
                self.templates["answer_user"],
                frame_info_str=frame_info,
                query=format_query_with_options(query, options),
            ),
        )


def render_frame_info(package: dict) -> str:
    """One line per package entry, in temporal order"""
    lines: List[str] = []
    for entry in package.get("entries", []):
        start, end = entry["span"]
        frames = ",".join(str(f) for f in entry["frames"])
        line = f"[{start:.1f}s-{end:.1f}s] frames {frames}"
        if entry.get("text"):
            line += f" | {entry['source']}: {entry['text']}"
        lines.append(line)
    return "\n" + "\n".join(lines) if lines else "(no evidence)"
