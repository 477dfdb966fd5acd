#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "cakesim/packet.hpp"

namespace cakesim {

enum class AckFilterMode : uint8_t { Off, Conservative, Aggressive };

AckFilterMode parse_ack_filter_mode(const std::string& name);
const char* ack_filter_mode_name(AckFilterMode mode);

// A pure ACK carries no data and no connection-control flags.
bool is_pure_ack(const Packet& pkt);

// True iff dropping `old_ack` loses no information once `new_ack` is
// queued behind it. Both must be pure ACKs of the same flow.
// prev_window is the receive window of the ACK enqueued immediately
// before old_ack, when known; an old ACK whose window differs from both
// its predecessor and the new ACK counts as a window update and is kept.
bool makes_redundant(const Packet& new_ack, const Packet& old_ack,
                     std::optional<uint16_t> prev_window);

// Scans the flow queue after `queue.back()` was enqueued and picks at
// most one earlier pure ACK to drop. Returns its queue position. The scan
// walks newest-first and stops at the first non-pure-ACK.
std::optional<size_t> filter_on_enqueue(const std::deque<Packet>& queue,
                                        AckFilterMode mode);

} // namespace cakesim
