"""Symbolic test case tree: lazy expansion and prioritized trace selection.

The tree stores bounded paths through the CFG. A node is the pair (CFG node
id, occurrence number k); (n, k) is unique in the tree even when n repeats
along cyclic paths. Expansion is incremental: children are added node by
node along unconditional chains and stops as soon as an uncovered edge with
a non-trivial guard shows up at the frontier, or when no expansion below a
node can reveal further uncovered edges.

Selection extends the trace currently under investigation when its frontier
still offers an uncovered non-trivial edge; otherwise it runs the trace to
the exit to finish a test case, and after that picks the globally closest
uncovered edge (shortest CFG distance from the start node, ties broken by
smaller node id, then true before false), finds a tree instance of it and
walks bottom-up to the root.

Pruning removes the subtree hanging off an infeasible branch and remembers
the (prefix, edge) pair so the same choice is never proposed again; an edge
pruned under one prefix stays selectable under others.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DepthBoundReached
from .imr import Cfg, CfgEdge, Target


@dataclass
class StctNode:
    node_id: int
    k: int
    parent: "StctNode | None"
    in_edge: CfgEdge | None
    depth: int
    serial: int
    children: list["StctNode"] = field(default_factory=list)
    pruned_edges: set[int] = field(default_factory=set)
    expanded: bool = False

    def __repr__(self) -> str:
        return f"StctNode(n{self.node_id},k{self.k})"


@dataclass
class Trace:
    nodes: list[StctNode]
    edges: list[CfgEdge]
    complete: bool
    mode: str = "fresh"  # fresh, extend, complete
    target_edge: CfgEdge | None = None

    @property
    def leaf(self) -> StctNode:
        return self.nodes[-1]

    def conditional_positions(self) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.conditional]

    def guard_labels(self, cfg: Cfg) -> list[str]:
        from .imr import guard_text

        return [guard_text(cfg, e) for e in self.edges if e.conditional]


@dataclass
class CoverageState:
    targets: set[Target]
    final_nodes: set[int] = field(default_factory=set)
    final_edges: set[int] = field(default_factory=set)
    pending_edges: set[int] = field(default_factory=set)
    pending_nodes: set[int] = field(default_factory=set)
    # per-edge verdicts of failed attempts: unsat / unknown
    attempts: dict[int, list[str]] = field(default_factory=dict)
    depth_bound_hits: int = 0

    def edge_covered(self, eid: int) -> bool:
        return eid in self.final_edges or eid in self.pending_edges

    def mark_pending(self, trace: Trace) -> None:
        for sn in trace.nodes:
            self.pending_nodes.add(sn.node_id)
        for e in trace.edges:
            self.pending_edges.add(e.eid)

    def commit_pending(self) -> None:
        self.final_nodes |= self.pending_nodes
        self.final_edges |= self.pending_edges
        self.clear_pending()

    def clear_pending(self) -> None:
        self.pending_edges.clear()
        self.pending_nodes.clear()

    def record_attempt(self, eid: int, verdict: str) -> None:
        self.attempts.setdefault(eid, []).append(verdict)

    def complete_for(self, criterion: str) -> bool:
        for t in self.targets:
            if t.kind == "node" and t.ident not in self.final_nodes:
                return False
            if t.kind == "edge" and criterion == "c1" and t.ident not in self.final_edges:
                return False
        return True


class Stct:
    def __init__(self, cfg: Cfg, coverage: CoverageState, max_depth: int):
        self.cfg = cfg
        self.coverage = coverage
        self.max_depth = max_depth
        self._serial = 0
        self._k: dict[int, int] = {}
        self.root = self._make_node(cfg.entry, None, None)
        self.instances: dict[int, list[StctNode]] = {}  # cfg edge id -> children
        self.depth_reports: list[DepthBoundReached] = []

    # -- construction ---------------------------------------------------------

    def _make_node(self, cfg_node: int, parent: StctNode | None,
                   in_edge: CfgEdge | None) -> StctNode:
        k = self._k.get(cfg_node, 0)
        self._k[cfg_node] = k + 1
        depth = 0 if parent is None else parent.depth + 1
        node = StctNode(cfg_node, k, parent, in_edge, depth, self._serial)
        self._serial += 1
        return node

    def ensure_children(self, node: StctNode) -> None:
        if node.expanded:
            return
        if node.depth >= self.max_depth:
            report = DepthBoundReached(
                f"expansion stopped at depth {node.depth} (n{node.node_id})")
            self.depth_reports.append(report)
            self.coverage.depth_bound_hits += 1
            return
        for edge in self.cfg.out_edges(node.node_id):
            if edge.eid in node.pruned_edges:
                continue
            child = self._make_node(edge.dst, node, edge)
            node.children.append(child)
            self.instances.setdefault(edge.eid, []).append(child)
        node.expanded = True

    def expand(self, leaf: StctNode) -> int:
        """Incremental expansion below leaf; returns number of nodes added.

        Descends through unconditional and already-covered edges, stopping
        a branch at the first uncovered non-trivial edge, at the depth
        bound, and wherever no uncovered target is reachable any more.
        """
        before = self._serial
        worth = self._reachable_uncovered()
        work = [leaf]
        while work:
            node = work.pop(0)
            if node.node_id not in worth:
                continue
            self.ensure_children(node)
            for child in node.children:
                if child.expanded:
                    continue
                e = child.in_edge
                assert e is not None
                if e.conditional and not self.coverage.edge_covered(e.eid):
                    continue  # frontier target: stop this branch
                if child.node_id == self.cfg.exit:
                    continue
                work.append(child)
        return self._serial - before

    def _reachable_uncovered(self) -> set[int]:
        """CFG nodes from which an uncovered target is still reachable."""
        uncovered_srcs = set()
        for t in self.coverage.targets:
            if t.kind == "edge" and not self.coverage.edge_covered(t.ident):
                uncovered_srcs.add(self.cfg.edges[t.ident].src)
            elif t.kind == "node" and t.ident not in self.coverage.final_nodes \
                    and t.ident not in self.coverage.pending_nodes:
                uncovered_srcs.add(t.ident)
        # walk predecessors to a fixpoint
        result = set(uncovered_srcs)
        changed = True
        while changed:
            changed = False
            for e in self.cfg.edges:
                if e.dst in result and e.src not in result:
                    result.add(e.src)
                    changed = True
        return result

    # -- traces ----------------------------------------------------------------

    def trace_to(self, node: StctNode, mode: str,
                 target: CfgEdge | None) -> Trace:
        chain: list[StctNode] = []
        cur: StctNode | None = node
        while cur is not None:
            chain.append(cur)
            cur = cur.parent
        chain.reverse()
        edges = [sn.in_edge for sn in chain[1:]]
        trace = Trace(chain, edges, chain[-1].node_id == self.cfg.exit, mode, target)
        return self._slide(trace)

    def _slide(self, trace: Trace) -> Trace:
        """Extend through forced unconditional chains up to the next decision."""
        while True:
            leaf = trace.leaf
            if leaf.node_id == self.cfg.exit:
                trace.complete = True
                return trace
            outs = self.cfg.out_edges(leaf.node_id)
            if len(outs) != 1 or outs[0].conditional:
                return trace
            if leaf.depth >= self.max_depth:
                self.coverage.depth_bound_hits += 1
                return trace
            self.ensure_children(leaf)
            nxt = [c for c in leaf.children if c.in_edge is outs[0]]
            if not nxt:
                return trace
            trace.nodes.append(nxt[0])
            trace.edges.append(outs[0])

    # -- selection ---------------------------------------------------------------

    def select_trace(self, active: Trace | None) -> Trace | None:
        """Next trace to hand to the interpreter, or None when done."""
        self.ensure_children(self.root)
        if active is not None and not active.complete:
            extended = self._extend(active)
            if extended is not None:
                return extended
            completed = self._complete(active)
            if completed is not None:
                return completed
            return self._fresh()
        return self._fresh()

    def _edge_priority(self, edge: CfgEdge) -> tuple[int, int, int]:
        return (self.cfg.root_distance(edge), edge.src,
                0 if edge.polarity else 1)

    def _extend(self, active: Trace) -> Trace | None:
        leaf = active.leaf
        self.expand(leaf)
        best: tuple[tuple[int, int, int], int, StctNode] | None = None
        work = [leaf]
        while work:
            node = work.pop(0)
            for child in node.children:
                e = child.in_edge
                assert e is not None
                if e.conditional and not self.coverage.edge_covered(e.eid):
                    key = (self._edge_priority(e), child.serial, child)
                    if best is None or key[:2] < best[:2]:
                        best = key
                    continue
                work.append(child)
        if best is None:
            return None
        child = best[2]
        return self.trace_to(child, "extend", child.in_edge)

    def _complete(self, active: Trace) -> Trace | None:
        """Shortest continuation from the active leaf to the exit node."""
        leaf = active.leaf
        if leaf.node_id == self.cfg.exit:
            active.complete = True
            return active
        parents: dict[int, StctNode] = {leaf.serial: leaf}
        frontier = [leaf]
        seen = {leaf.serial}
        goal: StctNode | None = None
        while frontier and goal is None:
            nxt: list[StctNode] = []
            for node in frontier:
                if node.depth >= self.max_depth:
                    self.coverage.depth_bound_hits += 1
                    continue
                self.ensure_children(node)
                for child in node.children:
                    if child.serial in seen:
                        continue
                    seen.add(child.serial)
                    if child.node_id == self.cfg.exit:
                        goal = child
                        break
                    nxt.append(child)
                if goal is not None:
                    break
            frontier = nxt
        if goal is None:
            return None
        return self.trace_to(goal, "complete", None)

    def _fresh(self) -> Trace | None:
        while True:
            ranked = sorted(
                (e for e in self.cfg.edges
                 if e.conditional and not self.coverage.edge_covered(e.eid)
                 and e.src not in self.cfg.unreachable),
                key=self._edge_priority,
            )
            if not ranked and not self._node_targets_left():
                return None
            for edge in ranked:
                options = self.instances.get(edge.eid, [])
                if options:
                    child = min(options, key=lambda n: (n.depth, n.serial))
                    return self.trace_to(child, "fresh", edge)
            grown = self._forced_expansion_sweep()
            if not grown:
                return self._fresh_for_nodes() if self._node_targets_left() else None

    def _node_targets_left(self) -> bool:
        return any(
            t.kind == "node" and t.ident not in self.coverage.final_nodes
            for t in self.coverage.targets
        )

    def _fresh_for_nodes(self) -> Trace | None:
        """C0 backstop: reach an uncovered node through already-covered edges."""
        wanted = {t.ident for t in self.coverage.targets
                  if t.kind == "node" and t.ident not in self.coverage.final_nodes}
        if not wanted:
            return None
        best: StctNode | None = None
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.node_id in wanted:
                if best is None or node.serial < best.serial:
                    best = node
            stack.extend(reversed(node.children))
        if best is None:
            return None
        return self.trace_to(best, "fresh", best.in_edge)

    def _forced_expansion_sweep(self) -> int:
        grown = 0
        stack = [self.root]
        leaves: list[StctNode] = []
        while stack:
            node = stack.pop()
            if not node.expanded:
                leaves.append(node)
            stack.extend(reversed(node.children))
        for leaf in sorted(leaves, key=lambda n: n.serial):
            grown += self.expand(leaf)
        return grown

    # -- pruning -----------------------------------------------------------------

    def prune_infeasible(self, trace: Trace, failing_branch_index: int) -> CfgEdge:
        """Remove the subtree hanging off the failing branch of a trace."""
        positions = trace.conditional_positions()
        pos = positions[failing_branch_index]
        parent = trace.nodes[pos]
        child = trace.nodes[pos + 1]
        edge = trace.edges[pos]
        parent.pruned_edges.add(edge.eid)
        if child in parent.children:
            parent.children.remove(child)
        self._deregister(child)
        return edge

    def _deregister(self, node: StctNode) -> None:
        e = node.in_edge
        if e is not None:
            lst = self.instances.get(e.eid, [])
            if node in lst:
                lst.remove(node)
        for child in node.children:
            self._deregister(child)

    # -- debugging -----------------------------------------------------------------

    def dump(self) -> str:
        lines: list[str] = ["stct"]

        def walk(node: StctNode, indent: int) -> None:
            from .imr import guard_text

            label = f"(n{node.node_id},k{node.k})"
            if node.in_edge is not None and node.in_edge.conditional:
                label += f" <{guard_text(self.cfg, node.in_edge)}>"
            lines.append("  " * indent + label)
            for child in node.children:
                walk(child, indent + 1)

        walk(self.root, 1)
        return "\n".join(lines) + "\n"
