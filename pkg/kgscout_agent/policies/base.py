from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from ..trajectory import Action, Step


class PolicyTransportError(ConnectionError):
    """The policy backend could not be reached after all retries."""


@dataclass
class PolicyTurn:
    """
    One policy reply.

    message is the assistant message exactly as it will appear in the conversation; actions are
    its parsed form. error is set when the reply could not be turned into actions.
    """
    message: Dict[str, Any]
    actions: List[Action] = field(default_factory=list)
    error: Optional[str] = None


class Policy(ABC):
    """
    Abstract interface for agent policies.

    A policy maps the rendered conversation to the next action sequence. Policies keep no state
    shared between trajectories, so one instance per agent is enough for concurrent runs.
    """

    @abstractmethod
    async def next_turn(
        self,
        messages: List[Dict[str, Any]],
        tool_schemas: List[Dict[str, Any]],
        history: Sequence[Step],
    ) -> PolicyTurn:
        """
        Produce the actions of step len(history) + 1.

        Raises:
            PolicyTransportError: If the backend is unreachable after bounded retries
        """
        pass

    async def close(self) -> None:
        pass
