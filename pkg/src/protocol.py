# # -----------------------------------------------------------------------------
# # ACK/NAKx selective sampling retransmission protocol
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------

from dataclasses import dataclass, field
from enum import Enum

from exceptions import EnergyCausalityError, InvalidArgumentError, ProtocolStateError
from packetError import pepAdaptive

DELIVERED = "delivered"
DROPPED = "dropped"
CONTINUE = "continue"
WAITING = "waiting"


class FeedbackKind(Enum):
    ACK = "ACK"
    NAK = "NAK"
    NAKX = "NAKx"


@dataclass(frozen=True)
class Feedback:
    kind: FeedbackKind
    x: int = None

    def __post_init__(self):
        if self.kind is FeedbackKind.NAKX:
            if not isinstance(self.x, int) or self.x < 0:
                raise InvalidArgumentError(f"NAKx needs a sampled count x >= 0, got {self.x}")
        elif self.x is not None:
            raise InvalidArgumentError(f"{self.kind.value} carries no sampled count")

    @classmethod
    def nakx(cls, x):
        return cls(FeedbackKind.NAKX, int(x))

    @property
    def requestsFullPacket(self):
        # ACK (new packet), NAK and NAK0 all lead to a full packet
        return self.kind is not FeedbackKind.NAKX or self.x == 0

    def pendingUnits(self, beta):
        if self.requestsFullPacket:
            return beta
        return beta - self.x

    def checkAgainst(self, beta):
        if self.kind is FeedbackKind.NAKX:
            if beta == 1:
                raise ProtocolStateError("conventional ACK/NAK link cannot carry NAKx")
            if self.x > beta:
                raise ProtocolStateError(f"NAK{self.x} exceeds beta = {beta}")

    @property
    def label(self):
        if self.kind is FeedbackKind.NAKX:
            return f"NAK{self.x}"
        return self.kind.value


ACK = Feedback(FeedbackKind.ACK)
NAK = Feedback(FeedbackKind.NAK)


def feedbackAlphabet(beta):
    # ACK, NAK and, for beta > 1, NAK0 ... NAKbeta
    if beta == 1:
        return [ACK, NAK]
    return [ACK, NAK] + [Feedback.nakx(x) for x in range(beta + 1)]


def advanceRetransIndex(k, maxAttempts, feedback):
    if not 1 <= k <= maxAttempts:
        raise InvalidArgumentError(f"retransmission index {k} outside 1..{maxAttempts}")
    notAcked = 0 if feedback.kind is FeedbackKind.ACK else 1
    return (k % maxAttempts) * notAcked + 1


def transmissionCost(action, pendingUnits, beta):
    # energy units for sending pendingUnits/beta of a packet at full-packet level `action`
    return -(-action * pendingUnits // beta)


#################################
### TRANSMITTER #################
#################################

@dataclass
class TxFrameState:
    maxAttempts: int
    beta: int
    retransIndex: int = 1
    lastFeedback: Feedback = ACK

    @property
    def pendingUnits(self):
        return self.lastFeedback.pendingUnits(self.beta)

    def applyFeedback(self, feedback, fresh):
        # fresh: the feedback answers a transmission made in this slot
        if fresh and feedback.kind is FeedbackKind.ACK:
            outcome = DELIVERED
        elif feedback.kind is not FeedbackKind.ACK and self.retransIndex == self.maxAttempts:
            outcome = DROPPED
        elif feedback.kind is FeedbackKind.ACK:
            outcome = WAITING
        else:
            outcome = CONTINUE
        self.retransIndex = advanceRetransIndex(self.retransIndex, self.maxAttempts, feedback)
        self.lastFeedback = ACK if outcome == DROPPED else feedback
        return outcome


@dataclass(frozen=True)
class Transmission:
    sentUnits: int
    spent: int
    transmitted: bool


def transmitterStep(frame, txLevel, action):
    pending = frame.pendingUnits
    if pending == 0:
        # receiver already holds the whole packet and only waits for decode energy
        return Transmission(0, 0, True)
    if action <= 0:
        return Transmission(0, 0, False)
    spent = transmissionCost(action, pending, frame.beta)
    if spent > txLevel:
        raise EnergyCausalityError(f"action {action} needs {spent} units, transmitter holds {txLevel}")
    return Transmission(pending, spent, True)


#################################
### RECEIVER ####################
#################################

@dataclass
class RxSampleStore:
    storedUnits: int = 0
    partPeps: list = field(default_factory=list)

    def add(self, units, pep):
        self.storedUnits += units
        self.partPeps.append(pep)

    def clear(self):
        self.storedUnits = 0
        self.partPeps.clear()


@dataclass(frozen=True)
class ReceptionPlan:
    sampledUnits: int
    spent: int
    decode: bool
    storedAfter: int


def planReception(storedUnits, incomingUnits, rxLevel, units, accumulate=True):
    """
    Decides how much of an incoming part the receiver samples and whether it decodes.

    storedUnits and incomingUnits count 1/beta packet fractions, rxLevel and the
    returned spend are receiver battery units. With accumulate=False the reported
    stored amount only counts the part sampled in this slot.
    """
    beta = units.beta
    if storedUnits < 0 or incomingUnits < 0 or storedUnits + incomingUnits > beta:
        raise ProtocolStateError(f"stored {storedUnits} + incoming {incomingUnits} exceeds {beta} fractions")
    samplingCost = incomingUnits * units.samplingUnits
    decodeCost = units.decodeUnits + units.feedbackUnits
    complete = storedUnits + incomingUnits == beta
    if complete and rxLevel >= samplingCost + decodeCost:
        return ReceptionPlan(incomingUnits, samplingCost + decodeCost, True, 0)

    if beta == 1:
        # conventional receiver samples until its energy runs out and throws the samples away
        return ReceptionPlan(0, min(rxLevel, samplingCost), False, 0)

    affordable = rxLevel // units.samplingUnits if units.samplingUnits > 0 else incomingUnits
    sampled = min(incomingUnits, affordable)
    storedAfter = storedUnits + sampled if accumulate else sampled
    return ReceptionPlan(sampled, sampled * units.samplingUnits, False, storedAfter)


def feedbackForPlan(plan, beta):
    if plan.decode:
        raise ProtocolStateError("decode outcome is drawn, not planned")
    if beta == 1:
        return NAK
    return Feedback.nakx(plan.storedAfter)


def receiverStep(store, incomingUnits, rxLevel, units, partPep, rng):
    plan = planReception(store.storedUnits, incomingUnits, rxLevel, units)
    if plan.decode:
        peps = list(store.partPeps)
        if incomingUnits > 0:
            peps.append(partPep)
        errorProbability = pepAdaptive(peps)
        success = rng.random() >= errorProbability
        store.clear()
        return (ACK if success else NAK), plan.spent

    if plan.sampledUnits > 0:
        store.add(plan.sampledUnits, partPep)
    if units.beta == 1:
        store.clear()
    return feedbackForPlan(plan, units.beta), plan.spent
