#include "cakesim/ackfilter.hpp"

#include <stdexcept>

namespace cakesim {

AckFilterMode parse_ack_filter_mode(const std::string& name) {
    if (name == "off") return AckFilterMode::Off;
    if (name == "on" || name == "conservative") return AckFilterMode::Conservative;
    if (name == "aggressive") return AckFilterMode::Aggressive;
    throw std::invalid_argument("unknown ack-filter mode: " + name);
}

const char* ack_filter_mode_name(AckFilterMode mode) {
    switch (mode) {
        case AckFilterMode::Off: return "off";
        case AckFilterMode::Conservative: return "on";
        case AckFilterMode::Aggressive: return "aggressive";
    }
    return "?";
}

bool is_pure_ack(const Packet& pkt) {
    if (pkt.protocol != Protocol::Tcp || !pkt.tcp) return false;
    if (pkt.payload_len != 0) return false;
    const TcpInfo& t = *pkt.tcp;
    if (!t.has_flag(tcpflag::Ack)) return false;
    if (t.flags & (tcpflag::Syn | tcpflag::Fin | tcpflag::Rst | tcpflag::Urg))
        return false;
    return true;
}

namespace {

// Every SACK block of `old_t` must be subsumed: either cumulatively
// acknowledged by new_t.ack or contained in one of new_t's SACK blocks.
bool sack_subsumed(const TcpInfo& new_t, const TcpInfo& old_t) {
    for (const auto& [start, end] : old_t.sack_blocks) {
        if (seq_geq(new_t.ack, end)) continue;
        bool covered = false;
        for (const auto& [ns, ne] : new_t.sack_blocks) {
            if (seq_geq(start, ns) && seq_geq(ne, end)) {
                covered = true;
                break;
            }
        }
        if (!covered) return false;
    }
    return true;
}

// Option kinds present on the old ACK must also appear on the new one.
// NOP/EOL padding is meaningless and SACK has its own subsumption rule.
bool options_subsumed(const TcpInfo& new_t, const TcpInfo& old_t) {
    for (uint8_t kind : old_t.options) {
        if (kind == tcpopt::Nop || kind == tcpopt::Eol || kind == tcpopt::Sack)
            continue;
        if (!new_t.has_option(kind)) return false;
    }
    return true;
}

} // namespace

bool makes_redundant(const Packet& new_ack, const Packet& old_ack,
                     std::optional<uint16_t> prev_window) {
    const TcpInfo& nt = *new_ack.tcp;
    const TcpInfo& ot = *old_ack.tcp;

    // Strictly more bytes acknowledged; duplicates always survive so
    // fast retransmit keeps working.
    if (!seq_after(nt.ack, ot.ack)) return false;

    // Unknown TCP extensions are never dropped.
    if (ot.has_unknown_option()) return false;

    if (!sack_subsumed(nt, ot)) return false;
    if (!options_subsumed(nt, ot)) return false;

    // Window update protection: the old ACK is droppable only when it
    // did not change the advertised window, or the new ACK advertises at
    // least as much.
    const bool window_unchanged = prev_window && *prev_window == ot.window;
    if (!window_unchanged && nt.window < ot.window) return false;

    // ECN echo state is passed through, not collapsed.
    if (ot.has_flag(tcpflag::Ece) != nt.has_flag(tcpflag::Ece)) return false;

    return true;
}

std::optional<size_t> filter_on_enqueue(const std::deque<Packet>& queue,
                                        AckFilterMode mode) {
    if (mode == AckFilterMode::Off || queue.size() < 2) return std::nullopt;

    const Packet& newest = queue.back();
    if (!is_pure_ack(newest)) return std::nullopt;

    // Walk the contiguous run of pure ACKs that precedes the new packet,
    // newest first. Per-flow queueing keeps this scan short.
    const size_t last = queue.size() - 1; // position of the new packet
    size_t run_begin = last;              // first index of the pure-ACK run
    while (run_begin > 0 && is_pure_ack(queue[run_begin - 1])) --run_begin;
    if (run_begin == last) return std::nullopt; // no earlier pure ACKs

    size_t redundant_in_run = 0;
    std::optional<size_t> victim;
    for (size_t i = last; i-- > run_begin;) {
        std::optional<uint16_t> prev_window;
        if (i > run_begin) prev_window = queue[i - 1].tcp->window;
        if (makes_redundant(newest, queue[i], prev_window)) {
            ++redundant_in_run;
            if (!victim) victim = i; // most recently enqueued redundant ACK
        }
    }
    if (!victim) return std::nullopt;

    switch (mode) {
        case AckFilterMode::Aggressive:
            return victim;
        case AckFilterMode::Conservative:
            // Keep at least two redundant ACKs queued after the drop.
            if (redundant_in_run - 1 >= 2) return victim;
            return std::nullopt;
        case AckFilterMode::Off:
            break;
    }
    return std::nullopt;
}

} // namespace cakesim
