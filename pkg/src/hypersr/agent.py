"""Optional LLM client for skill synthesis and candidate annotation.

Strictly outside the discovery loop: it can draft a skill file before a run
and attach prose commentary after one, but it never evaluates candidates,
never reorders the ranking, and the whole pipeline passes its acceptance
tests with this module disabled and no network access.

Online use is opt-in (online=True); the default is a deterministic error
pointing at the bundled skills, with no network I/O attempted.  The API key
is read from the environment variable named in the provider config and is
never logged or echoed in errors.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass
from importlib import resources

from .exprtree import ALL_OPS
from .skills import SCHEMA_VERSION, Skill, SkillError, skill_from_dict

__all__ = [
    "ProviderConfig",
    "AgentError",
    "synthesize_skill",
    "annotate_candidates",
    "build_synthesis_prompt",
]


class AgentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProviderConfig:
    endpoint_url: str
    api_key_env_var: str
    model_name: str
    timeout: float = 60.0
    max_retries: int = 2

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


def build_synthesis_prompt(descriptor: str) -> str:
    template = (resources.files("hypersr")
                .joinpath("assets/prompts/skill_synthesis.txt")
                .read_text())
    return template.format(schema_version=SCHEMA_VERSION,
                           operators=", ".join(sorted(ALL_OPS)),
                           descriptor=descriptor)


def _default_transport(provider: ProviderConfig):
    """HTTP chat-completion transport; built lazily so offline paths never
    import or touch the network stack."""
    import requests

    key = os.environ.get(provider.api_key_env_var)
    if not key:
        raise AgentError(
            f"online mode needs an API key in ${provider.api_key_env_var}")

    def send(messages):
        resp = requests.post(
            provider.endpoint_url,
            json={"model": provider.model_name, "messages": messages},
            headers={"Authorization": f"Bearer {key}"},
            timeout=provider.timeout)
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]

    return send


def synthesize_skill(descriptor: str, provider: ProviderConfig,
                     online: bool = False, transport=None) -> Skill:
    """Ask the provider to draft a skill for a material-class descriptor.

    The response must be a single JSON object in the versioned skill schema;
    validation failures are fed back verbatim and the request retried up to
    provider.max_retries times.  transport is injectable for tests: a
    callable mapping the message list to the raw response text.
    """
    if not descriptor.strip():
        raise ValueError("descriptor must be non-empty")
    if not online:
        raise AgentError(
            "agent is offline; use the bundled skills "
            "(hyperelastic_iso, fiber_aniso) or pass online=True")
    send = transport or _default_transport(provider)
    messages = [{"role": "user", "content": build_synthesis_prompt(descriptor)}]
    last_error = None
    for _ in range(provider.max_retries + 1):
        try:
            text = send(messages)
        except AgentError:
            raise
        except Exception as e:
            raise AgentError(f"provider request failed: {e}") from e
        try:
            return skill_from_dict(json.loads(text))
        except (json.JSONDecodeError, SkillError, TypeError) as e:
            last_error = str(e)
            messages = messages + [
                {"role": "assistant", "content": text},
                {"role": "user", "content":
                    f"That response failed schema validation: {last_error}. "
                    f"Reply with one corrected JSON object only."},
            ]
    raise AgentError(
        f"skill synthesis failed after {provider.max_retries + 1} attempts; "
        f"last validation error: {last_error}")


def annotate_candidates(front, provider: ProviderConfig,
                        online: bool = False, transport=None) -> str:
    """Prose commentary on an audited front.  Purely decorative.

    The input list is never modified or reordered; any failure degrades to
    an empty annotation with a warning so reports still build offline.
    """
    if not front:
        return ""
    if not online:
        return ""
    from . import exprtree  # local import keeps module load light
    summary = "\n".join(
        f"- complexity {p.complexity}, train mse {p.train_mse:.4g}, "
        f"convexity {p.audit.convexity}: {exprtree.format_expr(p.expr)}"
        for p in front)
    messages = [{"role": "user", "content":
                 "Comment briefly on the physical plausibility and "
                 "interpretability of these candidate strain-energy "
                 "functions. Do not rank them.\n" + summary}]
    try:
        send = transport or _default_transport(provider)
        return str(send(messages))
    except Exception as e:
        warnings.warn(f"candidate annotation unavailable: {e}")
        return ""
