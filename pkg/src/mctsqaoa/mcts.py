"""Monte Carlo tree search over gate sequences.

Nodes are sequence prefixes.  The root offers every pool generator; any
other internal node offers all generators except the one just applied, and
length-q nodes are terminal.  Each iteration descends with the UCB rule

    argmax_a  Q(s,a)/N(s,a) + c * sqrt(2 ln N(s) / N(s,a)),

expands one unvisited action uniformly at random, completes the sequence by
uniform rollout, scores it with the duration solver, and adds the resulting
reward to every edge on the descent path.  Q(s,a) stores the **sum** of
backed-up rewards, so Q/N is the mean used by the rule above.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .npg import NpgConfig, NonFinite, best_of_inits, durations_from_draws
from .reward import GateSequence, RewardEvaluator, energy_ratio
from .rng import Stream

REWARD_TRANSFORMS = ("identity", "minmax_running")


class NotExpanded(RuntimeError):
    """UCB selection requires every action visited at least once."""


class TerminalNode(RuntimeError):
    """Terminal nodes have no actions to select."""


class EmptyTree(RuntimeError):
    """Extraction requires at least one completed iteration."""


@dataclass(frozen=True)
class MctsConfig:
    ucb_coefficient: float = 0.5
    iterations: int = 50
    reward_transform: str = "identity"

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.ucb_coefficient < 0:
            raise ValueError("ucb_coefficient must be nonnegative")
        if self.reward_transform not in REWARD_TRANSFORMS:
            raise ValueError(f"reward_transform must be one of {REWARD_TRANSFORMS}")


@dataclass
class TreeNode:
    state_seq: tuple[int, ...]
    visit_count: int = 0
    rollout_starts: int = 0
    edge_q: dict[int, float] = field(default_factory=dict)
    edge_n: dict[int, int] = field(default_factory=dict)
    children: dict[int, "TreeNode"] = field(default_factory=dict)
    # Best full completion seen from rollouts that started here: (suffix, raw reward).
    best_completion: tuple[tuple[int, ...], float] | None = None


def legal_actions(state_seq: tuple[int, ...], pool_size: int, q: int) -> tuple[int, ...]:
    if len(state_seq) >= q:
        return ()
    if not state_seq:
        return tuple(range(pool_size))
    return tuple(a for a in range(pool_size) if a != state_seq[-1])


def select_child(
    node: TreeNode,
    c: float,
    rng: np.random.Generator,
    pool_size: int,
    q: int,
) -> int:
    """UCB action choice at a fully expanded node; ties break uniformly."""
    actions = legal_actions(node.state_seq, pool_size, q)
    if not actions:
        raise TerminalNode(f"node {node.state_seq} is terminal")
    if any(node.edge_n.get(a, 0) == 0 for a in actions):
        raise NotExpanded(f"node {node.state_seq} has unvisited actions")
    total = node.visit_count
    scores = np.array(
        [
            node.edge_q[a] / node.edge_n[a]
            + c * np.sqrt(2.0 * np.log(total) / node.edge_n[a])
            for a in actions
        ]
    )
    best = np.flatnonzero(scores == scores.max())
    pick = best[0] if len(best) == 1 else rng.choice(best)
    return actions[int(pick)]


@dataclass(frozen=True)
class IterationRecord:
    sequence: GateSequence
    reward: float
    path_length: int


@dataclass
class RunReport:
    best_sequence: GateSequence
    best_ratio: float
    greedy_sequence: GateSequence
    greedy_ratio: float
    history: list[IterationRecord]
    function_eval_count: int


class _MinMaxRunning:
    """Rescales rewards to [0, 1] with the running min/max seen so far."""

    def __init__(self, low: float = np.inf, high: float = -np.inf):
        self.low = low
        self.high = high

    def __call__(self, value: float) -> float:
        self.low = min(self.low, value)
        self.high = max(self.high, value)
        if self.high == self.low:
            return 0.5
        return (value - self.low) / (self.high - self.low)

    def state(self) -> dict:
        return {"low": self.low, "high": self.high}


def _rollout(state_seq: tuple[int, ...], pool_size: int, q: int, rng: np.random.Generator) -> tuple[int, ...]:
    seq = list(state_seq)
    while len(seq) < q:
        choices = legal_actions(tuple(seq), pool_size, q)
        seq.append(int(choices[rng.integers(len(choices))]))
    return tuple(seq)


def run_iteration(
    root: TreeNode,
    solver,
    pool_size: int,
    q: int,
    cfg: MctsConfig,
    stream: Stream,
    transform=None,
) -> IterationRecord:
    """One select/expand/rollout/evaluate/backup cycle.

    ``solver`` maps (GateSequence, Stream) to the estimated reward.  A solve
    that raises NonFinite is retried once on a fresh stream; a second failure
    propagates and leaves all tree statistics untouched.
    """
    rng = stream.child("tree").generator()
    path: list[tuple[TreeNode, int]] = []
    node = root
    rollout_from: TreeNode | None = None
    while True:
        actions = legal_actions(node.state_seq, pool_size, q)
        if not actions:
            break
        unvisited = [a for a in actions if node.edge_n.get(a, 0) == 0]
        if unvisited:
            action = int(unvisited[rng.integers(len(unvisited))])
            child = node.children.get(action)
            if child is None:
                child = TreeNode(state_seq=node.state_seq + (action,))
                node.children[action] = child
            path.append((node, action))
            node = child
            rollout_from = node
            break
        action = select_child(node, cfg.ucb_coefficient, rng, pool_size, q)
        path.append((node, action))
        node = node.children[action]

    full = node.state_seq if len(node.state_seq) == q else _rollout(node.state_seq, pool_size, q, rng)
    sequence = GateSequence(full)

    try:
        reward = solver(sequence, stream.child("solve"))
    except NonFinite:
        reward = solver(sequence, stream.child("solve_retry"))

    backed = transform(reward) if transform is not None else reward
    for parent, action in path:
        parent.visit_count += 1
        parent.edge_q[action] = parent.edge_q.get(action, 0.0) + backed
        parent.edge_n[action] = parent.edge_n.get(action, 0) + 1
    node.visit_count += 1
    if rollout_from is not None and len(node.state_seq) < q:
        node.rollout_starts += 1
        suffix = full[len(node.state_seq):]
        if node.best_completion is None or reward > node.best_completion[1]:
            node.best_completion = (suffix, reward)

    return IterationRecord(sequence=sequence, reward=reward, path_length=len(path))


def greedy_sequence(root: TreeNode, pool_size: int, q: int) -> GateSequence:
    """Exploitation-only descent (c = 0), ties broken by lowest action index.

    Unvisited actions never compete.  If the descent reaches a node with no
    visited children, the best rollout completion recorded there finishes
    the sequence; such a node always has one unless the tree is empty.
    """
    if root.visit_count == 0:
        raise EmptyTree("no completed iterations")
    node = root
    while len(node.state_seq) < q:
        visited = [(a, n) for a, n in node.edge_n.items() if n > 0]
        if not visited:
            if node.best_completion is not None:
                return GateSequence(node.state_seq + node.best_completion[0])
            # Unreachable for trees built by run_iteration; degrade deterministically.
            actions = legal_actions(node.state_seq, pool_size, q)
            node_seq = node.state_seq + (actions[0],)
            return greedy_sequence(TreeNode(state_seq=node_seq, visit_count=1), pool_size, q)
        best_action = max(visited, key=lambda an: (node.edge_q[an[0]] / an[1], -an[0]))[0]
        node = node.children[best_action]
    return GateSequence(node.state_seq)


def extract_protocol(
    root: TreeNode,
    evaluator: RewardEvaluator,
    npg_cfg: NpgConfig,
    stream: Stream,
    q: int,
    pool=None,
) -> tuple[GateSequence, float]:
    """Greedy sequence plus its exact noiseless energy ratio.

    Durations are re-solved under the training noise; only the final report
    uses the exact reward.
    """
    seq = greedy_sequence(root, evaluator.model.pool_size, q)
    result = best_of_inits(evaluator, seq, npg_cfg, stream, pool=pool)
    durations = durations_from_draws(result.params.mu, evaluator.model.total_duration)
    return seq, evaluator.exact_ratio(seq, durations)


def tree_to_records(root: TreeNode) -> list[dict]:
    """Flatten the tree to per-node records (preorder, root first)."""
    records: list[dict] = []
    stack = [root]
    while stack:
        node = stack.pop()
        rec = {
            "seq": list(node.state_seq),
            "visits": node.visit_count,
            "rollout_starts": node.rollout_starts,
            "edges": {str(a): [node.edge_q.get(a, 0.0), node.edge_n.get(a, 0)] for a in node.edge_n},
        }
        if node.best_completion is not None:
            rec["completion"] = [list(node.best_completion[0]), node.best_completion[1]]
        records.append(rec)
        stack.extend(node.children[a] for a in sorted(node.children, reverse=True))
    return records


def tree_from_records(records: list[dict]) -> TreeNode:
    """Rebuild a tree from ``tree_to_records`` output; child links come from prefixes."""
    if not records:
        raise EmptyTree("no tree records")
    nodes: dict[tuple[int, ...], TreeNode] = {}
    for rec in records:
        seq = tuple(int(i) for i in rec["seq"])
        node = TreeNode(
            state_seq=seq,
            visit_count=int(rec["visits"]),
            rollout_starts=int(rec.get("rollout_starts", 0)),
            edge_q={int(a): float(qn[0]) for a, qn in rec["edges"].items()},
            edge_n={int(a): int(qn[1]) for a, qn in rec["edges"].items()},
        )
        completion = rec.get("completion")
        if completion is not None:
            node.best_completion = (tuple(int(i) for i in completion[0]), float(completion[1]))
        nodes[seq] = node
    for seq, node in nodes.items():
        if seq:
            parent = nodes.get(seq[:-1])
            if parent is None:
                raise ValueError(f"orphan tree record for state {seq}")
            parent.children[seq[-1]] = node
    root = nodes.get(())
    if root is None:
        raise ValueError("tree records lack a root")
    return root


def audit_tree(root: TreeNode, q: int) -> None:
    """Walk the tree and assert the visit bookkeeping identities.

    Every node's visit count equals its outgoing edge counts plus the number
    of times a search path ended there (tracked as rollout starts for
    non-terminal nodes), and each visited edge's count equals the child's
    visit count.  The root is never a path end.
    """
    stack = [root]
    while stack:
        node = stack.pop()
        edge_total = sum(node.edge_n.values())
        terminal = len(node.state_seq) >= q
        if terminal:
            assert not node.edge_n, f"terminal node {node.state_seq} has edges"
        elif node.state_seq == ():
            assert node.rollout_starts == 0, "root recorded a rollout start"
            assert node.visit_count == edge_total, (
                f"root visits {node.visit_count} != edge total {edge_total}"
            )
        else:
            assert node.visit_count == edge_total + node.rollout_starts, (
                f"node {node.state_seq}: visits {node.visit_count} != "
                f"{edge_total} edges + {node.rollout_starts} rollout starts"
            )
        for action, child in node.children.items():
            assert node.edge_n.get(action, 0) == child.visit_count, (
                f"edge {node.state_seq}->{action} count {node.edge_n.get(action, 0)} != "
                f"child visits {child.visit_count}"
            )
        stack.extend(node.children.values())


def _default_solver(evaluator: RewardEvaluator, npg_cfg: NpgConfig, pool=None):
    def solve(sequence: GateSequence, stream: Stream) -> float:
        return best_of_inits(evaluator, sequence, npg_cfg, stream, pool=pool).estimated_reward

    return solve


def full_run(
    evaluator: RewardEvaluator,
    q: int,
    npg_cfg: NpgConfig,
    mcts_cfg: MctsConfig,
    stream: Stream,
    budget: int | None = None,
    root: TreeNode | None = None,
    start_iteration: int = 0,
    transform=None,
    on_iteration=None,
    solver=None,
    worker_pool=None,
    max_iterations: int | None = None,
    prior_history: list[IterationRecord] | None = None,
) -> RunReport | None:
    """Full search: UCB iterations followed by protocol extraction.

    Per-iteration randomness is drawn from streams indexed by the absolute
    iteration number, so a resumed run reproduces an uninterrupted one.  When
    ``budget`` is given, no new iteration starts once the evaluation count
    reaches it.  The report's best protocol is the better (by exact noiseless
    ratio) of the greedy extraction and the highest-reward sequence in the
    history, both re-solved and exactly evaluated.

    ``max_iterations`` caps the iterations performed by this invocation
    without ending the run; if the cap stops the run early, None is returned
    and the caller is expected to resume later from the same tree.
    """
    pool_size = evaluator.model.pool_size
    if root is None:
        root = TreeNode(state_seq=())
    if transform is None and mcts_cfg.reward_transform == "minmax_running":
        transform = _MinMaxRunning()
    if solver is None:
        solver = _default_solver(evaluator, npg_cfg, pool=worker_pool)

    history: list[IterationRecord] = list(prior_history) if prior_history else []
    done = 0
    for t in range(start_iteration, mcts_cfg.iterations):
        if budget is not None and evaluator.count >= budget:
            break
        if max_iterations is not None and done >= max_iterations:
            return None
        record = run_iteration(root, solver, pool_size, q, mcts_cfg, stream.child("iter", t), transform)
        history.append(record)
        done += 1
        if on_iteration is not None:
            on_iteration(t, record)

    greedy_seq, greedy_ratio = extract_protocol(
        root, evaluator, npg_cfg, stream.child("greedy"), q, pool=worker_pool
    )
    best_seq, best_ratio = greedy_seq, greedy_ratio
    if history:
        top = max(history, key=lambda r: r.reward)
        result = best_of_inits(evaluator, top.sequence, npg_cfg, stream.child("best_history"), pool=worker_pool)
        durations = durations_from_draws(result.params.mu, evaluator.model.total_duration)
        top_ratio = evaluator.exact_ratio(top.sequence, durations)
        if top_ratio > best_ratio:
            best_seq, best_ratio = top.sequence, top_ratio

    return RunReport(
        best_sequence=best_seq,
        best_ratio=best_ratio,
        greedy_sequence=greedy_seq,
        greedy_ratio=greedy_ratio,
        history=history,
        function_eval_count=evaluator.count,
    )
