"""Security-goal checking over strand-space skeletons."""
from .charskel import CharacteristicResult, Failure, characteristic_skeleton
from .goals import SecurityGoal, load_goal, parse_goal
from .protocol import Protocol, load_protocol, parse_protocol
from .search import (
    DEFAULT_BOUNDS, SearchBounds, ShapeResult, Verdict, VerdictKind,
    check_goal, dead_within_bound, factors_through, shapes,
)
from .sexpr import ParseError, SkeletalError
from .skeleton import Homomorphism, Node, Preskeleton, Skeleton, find_homomorphisms, hull

__version__ = "0.1.0"

__all__ = [
    "CharacteristicResult", "Failure", "characteristic_skeleton",
    "SecurityGoal", "load_goal", "parse_goal",
    "Protocol", "load_protocol", "parse_protocol",
    "DEFAULT_BOUNDS", "SearchBounds", "ShapeResult", "Verdict", "VerdictKind",
    "check_goal", "dead_within_bound", "factors_through", "shapes",
    "ParseError", "SkeletalError",
    "Homomorphism", "Node", "Preskeleton", "Skeleton", "find_homomorphisms", "hull",
]
