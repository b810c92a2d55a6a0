"""In-process run of the demand, computing and communication phases.

Servers and users are plain objects exchanging values through per-user
mailboxes.  Subfunction outputs come from a seeded splitmix64 stream, so a
run is reproducible from ``(seed, K, field)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import Field, matvec
from .scheme import DemandMatrix, ProblemInstance, SchemePlan

_MASK64 = (1 << 64) - 1


def splitmix64(seed: int):
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


@dataclass(frozen=True)
class SubfunctionOutputs:
    f: tuple
    seed: int

    @classmethod
    def draw(cls, field_: Field, K: int, seed: int, zero: bool = False) -> SubfunctionOutputs:
        if zero:
            return cls((field_.zero,) * K, seed)
        stream = splitmix64(seed)
        if field_.is_prime:
            values = tuple(next(stream) % field_.q for _ in range(K))
        else:
            values = tuple(Fraction(next(stream) % 2001 - 1000, next(stream) % 16 + 1) for _ in range(K))
        return cls(values, seed)


@dataclass
class ServerState:
    id: int
    group: tuple[int, int]
    index: int
    tasks: tuple[int, ...]
    coefficients: tuple
    recipients: tuple[int, ...]
    computed: dict[int, object] = field(default_factory=dict)

    def compute(self, outputs: SubfunctionOutputs) -> None:
        self.computed = {k: outputs.f[k] for k in self.tasks}

    def encode(self, field_: Field):
        # only locally computed outputs may enter the message
        total = field_.zero
        for k, c in enumerate(self.coefficients):
            if c != 0:
                total = field_.add(total, field_.mul(c, self.computed[k]))
        return total


@dataclass(frozen=True)
class TransmissionRecord:
    server: int
    recipients: tuple[int, ...]
    payload: object
    coefficients: tuple


@dataclass
class TransmissionLog:
    records: list[TransmissionRecord] = field(default_factory=list)


@dataclass
class ServerAudit:
    server: int
    tasks: int
    recipients: int
    messages: int
    payload_ok: bool
    passed: bool


@dataclass
class AuditReport:
    servers: list[ServerAudit]

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.servers)

    @property
    def failing(self) -> list[int]:
        return [s.server for s in self.servers if not s.passed]

    def to_json(self) -> dict:
        return {"passed": self.passed, "failing_servers": self.failing}


def audit_constraints(plan: SchemePlan, log: TransmissionLog, outputs: SubfunctionOutputs | None = None) -> AuditReport:
    """Per-server check of the computation, connectivity and one-message limits.

    With ``outputs`` the payloads are also recomputed from the coefficient rows.
    """
    inst = plan.instance
    f = inst.field
    by_server: dict[int, list[TransmissionRecord]] = {}
    for rec in log.records:
        by_server.setdefault(rec.server, []).append(rec)
    audits = []
    for s in plan.servers:
        recs = by_server.get(s.id, [])
        recipients = set().union(*(r.recipients for r in recs)) if recs else set()
        support_ok = all(c == 0 or k in s.tasks for r in recs for k, c in enumerate(r.coefficients))
        payload_ok = support_ok
        if outputs is not None:
            payload_ok = payload_ok and all(r.payload == f.dot(r.coefficients, outputs.f) for r in recs)
        passed = len(s.tasks) <= inst.M and len(recipients) <= inst.delta and len(recs) == 1 and payload_ok
        audits.append(ServerAudit(s.id, len(s.tasks), len(recipients), len(recs), payload_ok, passed))
    return AuditReport(audits)


@dataclass
class SimulationReport:
    decoded: list
    expected: list
    N: int
    R: int
    audit: AuditReport
    log: TransmissionLog

    @property
    def exact(self) -> bool:
        return self.decoded == self.expected

    @property
    def passed(self) -> bool:
        return self.exact and self.audit.passed

    def to_json(self, field_: Field) -> dict:
        return {
            "decoded": [field_.format(x) for x in self.decoded],
            "expected": [field_.format(x) for x in self.expected],
            "N": self.N,
            "R": self.R,
            "exact": self.exact,
            "audit": self.audit.to_json(),
            "passed": self.passed,
        }


class PlanMismatch(ValueError):
    pass


def run(instance: ProblemInstance, demand: DemandMatrix, plan: SchemePlan, seed: int,
        zero_outputs: bool = False) -> SimulationReport:
    if plan.instance != instance or plan.demand.matrix != demand.matrix:
        raise PlanMismatch("plan was built for a different instance or demand")
    f = instance.field
    D = demand.matrix

    # computing phase
    outputs = SubfunctionOutputs.draw(f, instance.K, seed, zero=zero_outputs)
    servers = [ServerState(s.id, s.group, s.index, s.tasks, s.coefficients, tuple(s.recipients))
               for s in plan.servers]
    for s in servers:
        s.compute(outputs)

    # communication phase
    log = TransmissionLog()
    mailboxes: dict[int, dict[int, object]] = {u: {} for u in range(instance.L)}
    for s in servers:
        payload = s.encode(f)
        log.records.append(TransmissionRecord(s.id, s.recipients, payload, s.coefficients))
        for u in s.recipients:
            mailboxes[u][s.id] = payload

    # users decode from their own mailbox only
    decoded = []
    for u in range(instance.L):
        total = f.zero
        for r, x in mailboxes[u].items():
            total = f.add(total, f.mul(plan.C[u, r], x))
        decoded.append(total)

    expected = list(matvec(D, outputs.f))
    return SimulationReport(decoded, expected, plan.N, len(log.records),
                            audit_constraints(plan, log, outputs), log)
