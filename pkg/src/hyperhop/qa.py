"""Answer generation over retrieved passages via a chat LLM client."""

from __future__ import annotations

import hashlib
from importlib import resources
from typing import Protocol, Sequence

from .corpus import Passage
from .errors import ChatError
from .remote import EndpointConfig, Transport, chat_completion


def default_prompt_template(name: str) -> str:
    """Load a bundled prompt template (``answer`` or ``entity_extraction``)."""
    return resources.files("hyperhop").joinpath(f"prompts/{name}.txt").read_text(encoding="utf-8")


class ChatClient(Protocol):
    def complete(self, prompt: str) -> str: ...


class OfflineChatClient:
    """Deterministic placeholder client for offline pipelines and tests."""

    def complete(self, prompt: str) -> str:
        digest = hashlib.blake2b(prompt.encode("utf-8"), digest_size=6).hexdigest()
        return f"offline-answer-{digest}"


class RemoteChatClient:
    """OpenAI-compatible chat-completions client, temperature pinned to 0."""

    def __init__(self, endpoint: EndpointConfig, model: str, transport: Transport | None = None):
        self.endpoint = endpoint
        self.model = model
        self._transport = transport

    def complete(self, prompt: str) -> str:
        try:
            return chat_completion(
                self.endpoint,
                self.model,
                [{"role": "user", "content": prompt}],
                self._transport,
            )
        except Exception as exc:
            raise ChatError(f"chat completion failed: {exc}") from exc


def build_answer_prompt(query: str, passages: Sequence[Passage], template: str | None = None) -> str:
    """Instruction, titled passages in rank order, then the question.

    An empty passage list produces the closed-book prompt (instruction and
    question only).
    """
    template = template or default_prompt_template("answer")
    blocks = []
    for rank, passage in enumerate(passages, start=1):
        title = passage.title or passage.id
        blocks.append(f"[{rank}] {title}\n{passage.text}")
    context = "\n\n".join(blocks)
    return template.format(context=context, question=query).strip()


def answer(
    query: str,
    passages: Sequence[Passage],
    llm: ChatClient,
    template: str | None = None,
) -> str:
    """Prompt the LLM with the retrieved passages and return its answer."""
    prompt = build_answer_prompt(query, passages, template)
    return llm.complete(prompt).strip()
