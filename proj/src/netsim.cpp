#include "cakesim/netsim.hpp"

#include <algorithm>
#include <cassert>
#include <cstdlib>
#include <map>
#include <memory>

#include "cakesim/event_queue.hpp"
#include "cakesim/nat.hpp"
#include "cakesim/rng.hpp"

namespace cakesim {

namespace {

// Frame layouts: Ethernet 14, IPv4 20, TCP 32 (timestamps), UDP 8.
constexpr uint32_t kEthHdr = 14;
constexpr uint32_t kTcpHdrTotal = kEthHdr + 20 + 32; // 66 bytes on the wire
constexpr uint32_t kUdpHdrTotal = kEthHdr + 20 + 8;  // 42 bytes on the wire

SimTime wire_time(uint64_t rate_bps, uint64_t bytes) {
    unsigned __int128 num = (unsigned __int128)bytes * 8'000'000'000ull;
    return SimTime::ns(int64_t(num / rate_bps));
}

class Network;

// One direction of the bottleneck link: qdisc, serialising transmitter,
// propagation delay.
class Pipe {
  public:
    Pipe(EventQueue& ev, uint64_t rate_bps, SimTime prop_delay,
         std::unique_ptr<Qdisc> qdisc, std::function<void(Packet&&)> deliver)
        : ev_(ev), rate_(rate_bps), prop_(prop_delay), qdisc_(std::move(qdisc)),
          deliver_(std::move(deliver)) {}

    void send(Packet&& pkt) {
        qdisc_->enqueue(std::move(pkt), ev_.now());
        if (!busy_) poll();
    }

    Qdisc& qdisc() { return *qdisc_; }
    uint64_t delivered_pkts() const { return delivered_pkts_; }
    uint64_t delivered_bytes() const { return delivered_bytes_; }

  private:
    void poll() {
        if (busy_) return;
        auto out = qdisc_->dequeue(ev_.now());
        if (out.pkt) {
            busy_ = true;
            Packet pkt = std::move(*out.pkt);
            if (pkt.first_sent_time == SimTime()) pkt.first_sent_time = ev_.now();
            const SimTime ser = wire_time(rate_, pkt.total_len);
            ev_.schedule_in(ser, [this] {
                busy_ = false;
                poll();
            });
            ev_.schedule_in(ser + prop_, [this, p = std::move(pkt)]() mutable {
                delivered_pkts_++;
                delivered_bytes_ += p.total_len;
                deliver_(std::move(p));
            });
        } else if (out.wake) {
            schedule_poll(*out.wake);
        }
        // else: idle until the next enqueue
    }

    void schedule_poll(SimTime at) {
        if (poll_pending_ && pending_at_ <= at) return;
        poll_pending_ = true;
        pending_at_ = at;
        ev_.schedule(at, [this, at] {
            if (poll_pending_ && pending_at_ == at) poll_pending_ = false;
            poll();
        });
    }

    EventQueue& ev_;
    uint64_t rate_;
    SimTime prop_;
    std::unique_ptr<Qdisc> qdisc_;
    std::function<void(Packet&&)> deliver_;
    bool busy_ = false;
    bool poll_pending_ = false;
    SimTime pending_at_;
    uint64_t delivered_pkts_ = 0;
    uint64_t delivered_bytes_ = 0;
};

struct EndpointKey {
    std::array<uint8_t, 16> ip{};
    uint8_t len = 0;
    uint16_t port = 0;
    uint8_t proto = 0;
    auto operator<=>(const EndpointKey&) const = default;

    static EndpointKey of(const IpAddr& ip, uint16_t port, Protocol proto) {
        return {ip.bytes, ip.len, port, uint8_t(proto)};
    }
};

class FlowBase {
  public:
    FlowBase(Network& net, const FlowSpec& spec, uint32_t tag, bool up)
        : net_(net), spec_(spec), tag_(tag), up_(up) {
        log_.name = spec.name;
        log_.direction = up ? Direction::Up : Direction::Down;
        log_.dscp = spec.dscp;
    }
    virtual ~FlowBase() = default;

    virtual void start() = 0;
    virtual void on_packet(Packet&& pkt) = 0;
    // Metrics tick: per-interval goodput and latency for the flows.csv row.
    virtual double rtt_sample_ms() { return -1; }

    uint32_t tag() const { return tag_; }
    FlowLog& log() { return log_; }

    void note_drop(DropCause cause) {
        log_.total_drops++;
        interval_drops_++;
        if (cause == DropCause::AckFilter) {
            log_.total_filtered++;
            interval_filtered_++;
        }
    }
    void note_rx(uint64_t payload) {
        log_.total_rx_bytes += payload;
        interval_rx_ += payload;
    }

    void sample_interval(double t, double dt) {
        FlowSample s;
        s.t = t;
        s.goodput_bps = double(interval_rx_) * 8.0 / dt;
        s.rtt_ms = rtt_sample_ms();
        s.drops = interval_drops_;
        s.filtered_acks = interval_filtered_;
        log_.samples.push_back(s);
        interval_rx_ = 0;
        interval_drops_ = 0;
        interval_filtered_ = 0;
    }

  protected:
    Network& net_;
    FlowSpec spec_;
    uint32_t tag_;
    bool up_; // data direction lan->wan
    FlowLog log_;
    uint64_t interval_rx_ = 0;
    uint64_t interval_drops_ = 0;
    uint64_t interval_filtered_ = 0;
};

class Network {
  public:
    explicit Network(const ScenarioConfig& cfg);

    MetricsLog run();

    EventQueue& ev() { return ev_; }
    Rng& rng() { return rng_; }
    const ScenarioConfig& cfg() const { return cfg_; }

    void register_endpoint(const IpAddr& ip, uint16_t port, Protocol proto,
                           FlowBase* flow) {
        demux_[EndpointKey::of(ip, port, proto)] = flow;
    }

    // Injects a packet at its source host; lan sources traverse the up
    // pipe (through NAT when enabled), wan sources the down pipe.
    void send(bool from_lan, Packet&& pkt) {
        if (from_lan) {
            if (nat_) nat_->translate_outbound(pkt);
            up_->send(std::move(pkt));
        } else {
            down_->send(std::move(pkt));
        }
    }

    SimTime flow_stop_time(const FlowSpec& s) const {
        if (s.duration == SimTime()) return cfg_.duration;
        return s.start + s.duration;
    }

  private:
    void deliver(bool to_lan, Packet&& pkt) {
        if (to_lan && nat_) nat_->translate_inbound(pkt);
        auto it = demux_.find(EndpointKey::of(pkt.dst_ip, pkt.dst_port, pkt.protocol));
        if (it != demux_.end()) it->second->on_packet(std::move(pkt));
        // Unmatched packets fall on the floor; endpoint references were
        // validated before the run, so this only affects late arrivals
        // for finished flows.
    }

    void metrics_tick();

    ScenarioConfig cfg_;
    EventQueue ev_;
    Rng rng_;
    std::unique_ptr<NatTable> nat_;
    std::unique_ptr<Pipe> up_, down_;
    std::map<EndpointKey, FlowBase*> demux_;
    std::vector<std::unique_ptr<FlowBase>> flows_;
    double last_tick_s_ = 0;
};

// Reno-style TCP: slow start, congestion avoidance, NewReno fast
// retransmit/recovery, limited transmit, delayed ACKs (every 2nd segment
// or 40 ms), RTO per the usual SRTT/RTTVAR estimator. Sequence numbers
// are byte counters; desk-scale runs stay far from 32-bit wrap.
class TcpFlow : public FlowBase {
  public:
    TcpFlow(Network& net, const FlowSpec& spec, uint32_t tag, bool up,
            const HostSpec& src, const HostSpec& dst, uint16_t sport, uint16_t dport)
        : FlowBase(net, spec, tag, up), src_(src), dst_(dst), sport_(sport),
          dport_(dport) {
        log_.type = "tcp";
    }

    void start() override {
        net_.register_endpoint(dst_.ip, dport_, Protocol::Tcp, this); // data in
        net_.register_endpoint(src_.ip, sport_, Protocol::Tcp, this); // acks back
        const SimTime jitter = SimTime::ns(int64_t(net_.rng().below(10'000'000)));
        const SimTime at = spec_.start + jitter;
        stop_ = net_.flow_stop_time(spec_);
        net_.ev().schedule(at, [this] { open(); });
    }

    void on_packet(Packet&& pkt) override {
        if (!pkt.tcp) return;
        if (pkt.dst_ip == dst_.ip && pkt.dst_port == dport_)
            receiver_segment(pkt);
        else
            sender_ack(pkt);
    }

    double rtt_sample_ms() override {
        return srtt_ns_ > 0 ? double(srtt_ns_) * 1e-6 : -1;
    }

  private:
    static constexpr int64_t kMinRtoNs = 200'000'000;  // 200 ms
    static constexpr int64_t kMaxRtoNs = 60'000'000'000;
    static constexpr uint64_t kSsthreshInf = ~0ull;
    // Advertised window: 65535 in the header with a fixed scale of 4.
    static constexpr uint64_t kRcvWindow = 65535ull << 4;

    void open() {
        cwnd_ = 10.0 * spec_.mss;
        ssthresh_ = kSsthreshInf;
        send_data();
    }

    uint64_t flight() const { return snd_nxt_ - snd_una_; }

    // Outstanding data minus segments that duplicate ACKs show to have
    // left the network.
    uint64_t pipe() const {
        const uint64_t gone = uint64_t(dupacks_) * spec_.mss;
        return flight() > gone ? flight() - gone : 0;
    }

    bool sending_allowed() const {
        if (net_.ev().now() >= stop_) return false;
        if (in_recovery_) {
            // recovery transmits are clocked by the pipe estimate, the
            // window itself stays at ssthresh
            const uint64_t wnd = std::min(uint64_t(cwnd_), kRcvWindow);
            return pipe() + spec_.mss <= wnd;
        }
        uint64_t wnd = uint64_t(cwnd_);
        if (dupacks_ > 0 && dupacks_ < 3)
            wnd += uint64_t(dupacks_) * spec_.mss; // limited transmit
        wnd = std::min(wnd, kRcvWindow);
        return flight() + spec_.mss <= wnd;
    }

    void send_data() {
        while (sending_allowed()) {
            emit_segment(snd_nxt_, false);
            snd_nxt_ += spec_.mss;
        }
        arm_rto();
    }

    void emit_segment(uint64_t seq, bool retx) {
        Packet pkt;
        pkt.src_ip = src_.ip;
        pkt.dst_ip = dst_.ip;
        pkt.src_port = sport_;
        pkt.dst_port = dport_;
        pkt.protocol = Protocol::Tcp;
        pkt.dscp = spec_.dscp;
        pkt.payload_len = spec_.mss;
        pkt.total_len = kTcpHdrTotal + spec_.mss;
        pkt.network_offset = kEthHdr;
        pkt.flow_tag = tag_;
        TcpInfo t;
        t.seq = uint32_t(seq);
        t.flags = tcpflag::Ack;
        t.window = 65535;
        t.options = {tcpopt::Timestamp};
        pkt.tcp = t;
        log_.total_tx_bytes += spec_.mss;
        if (!retx) sent_.push_back({seq + spec_.mss, net_.ev().now(), false});
        net_.send(up_, std::move(pkt));
    }

    void retransmit_head() {
        emit_segment(snd_una_, true);
        for (auto& rec : sent_)
            if (rec.end == snd_una_ + spec_.mss) rec.retx = true;
    }

    // --- sender side ---
    void sender_ack(const Packet& pkt) {
        const TcpInfo& t = *pkt.tcp;
        const uint64_t ack = unwrap(t.ack, snd_una_);
        if (ack > snd_una_ && ack <= snd_nxt_) {
            const uint64_t acked = ack - snd_una_;
            snd_una_ = ack;
            take_rtt_sample(ack);
            dupacks_ = 0;
            if (in_recovery_) {
                if (ack >= recover_) {
                    in_recovery_ = false;
                    cwnd_ = double(ssthresh_);
                } else {
                    // Partial ACK: the next hole is lost too.
                    retransmit_head();
                }
            } else if (uint64_t(cwnd_) < ssthresh_) {
                cwnd_ += double(std::min<uint64_t>(acked, 2 * spec_.mss));
            } else {
                cwnd_ += double(spec_.mss) * double(spec_.mss) / cwnd_;
            }
            backoff_ = 1;
            arm_rto();
            send_data();
        } else if (ack == snd_una_ && flight() > 0) {
            dupacks_++;
            if (dupacks_ == 3 && !in_recovery_) {
                ssthresh_ = std::max<uint64_t>(pipe() / 2, 2 * spec_.mss);
                recover_ = snd_nxt_;
                in_recovery_ = true;
                cwnd_ = double(ssthresh_);
                retransmit_head();
            }
            send_data(); // limited transmit, or pipe-clocked recovery
        }
    }

    void take_rtt_sample(uint64_t ack) {
        // Karn: only segments never retransmitted produce samples.
        const SimTime now = net_.ev().now();
        bool valid = false;
        SimTime sent_at;
        while (!sent_.empty() && sent_.front().end <= ack) {
            valid = !sent_.front().retx;
            sent_at = sent_.front().sent;
            sent_.pop_front();
        }
        if (!valid) return;
        const int64_t m = (now - sent_at).count_ns();
        if (srtt_ns_ < 0) {
            srtt_ns_ = m;
            rttvar_ns_ = m / 2;
        } else {
            const int64_t err = m - srtt_ns_;
            srtt_ns_ += err / 8;
            rttvar_ns_ += (std::abs(err) - rttvar_ns_) / 4;
        }
    }

    int64_t rto_ns() const {
        const int64_t base =
            srtt_ns_ < 0 ? 1'000'000'000 : srtt_ns_ + 4 * rttvar_ns_;
        return std::min(std::max(base, kMinRtoNs) * backoff_, kMaxRtoNs);
    }

    void arm_rto() {
        rto_epoch_++;
        if (flight() == 0) return;
        const uint64_t epoch = rto_epoch_;
        net_.ev().schedule_in(SimTime::ns(rto_ns()), [this, epoch] {
            if (epoch == rto_epoch_) on_rto();
        });
    }

    void on_rto() {
        if (flight() == 0) return;
        ssthresh_ = std::max<uint64_t>(flight() / 2, 2 * spec_.mss);
        cwnd_ = double(spec_.mss);
        in_recovery_ = false;
        dupacks_ = 0;
        backoff_ = std::min<int64_t>(backoff_ * 2, 64);
        // Retransmit the hole only; the receiver holds out-of-order data
        // and the cumulative ACK jumps once the hole is filled.
        retransmit_head();
        arm_rto();
    }

    // --- receiver side ---
    void receiver_segment(const Packet& pkt) {
        const TcpInfo& t = *pkt.tcp;
        const uint64_t seq = unwrap(t.seq, rcv_nxt_);
        const uint64_t end = seq + pkt.payload_len;

        if (seq <= rcv_nxt_ && end > rcv_nxt_) {
            const uint64_t before = rcv_nxt_;
            rcv_nxt_ = end;
            // absorb contiguous out-of-order data
            auto it = ooo_.begin();
            while (it != ooo_.end() && it->first <= rcv_nxt_) {
                rcv_nxt_ = std::max(rcv_nxt_, it->second);
                it = ooo_.erase(it);
            }
            note_rx(rcv_nxt_ - before);
            segs_since_ack_++;
            const bool filled_gap = rcv_nxt_ > end || !ooo_.empty();
            if (filled_gap || segs_since_ack_ >= 2) {
                send_ack();
            } else {
                arm_delack();
            }
        } else if (seq > rcv_nxt_) {
            auto [it, fresh] = ooo_.emplace(seq, end);
            if (!fresh) it->second = std::max(it->second, end);
            send_ack(); // out of order: duplicate ACK, immediately
        } else {
            send_ack(); // stale retransmission: re-ACK immediately
        }
    }

    void arm_delack() {
        delack_epoch_++;
        const uint64_t epoch = delack_epoch_;
        net_.ev().schedule_in(SimTime::ms(40), [this, epoch] {
            if (epoch == delack_epoch_ && segs_since_ack_ > 0) send_ack();
        });
    }

    void send_ack() {
        segs_since_ack_ = 0;
        delack_epoch_++;
        Packet pkt;
        pkt.src_ip = dst_.ip;
        pkt.dst_ip = src_.ip;
        pkt.src_port = dport_;
        pkt.dst_port = sport_;
        pkt.protocol = Protocol::Tcp;
        pkt.dscp = spec_.dscp;
        pkt.payload_len = 0;
        pkt.total_len = kTcpHdrTotal;
        pkt.network_offset = kEthHdr;
        pkt.flow_tag = tag_;
        TcpInfo t;
        t.ack = uint32_t(rcv_nxt_);
        t.flags = tcpflag::Ack;
        t.window = 65535;
        t.options = {tcpopt::Timestamp};
        pkt.tcp = t;
        net_.send(!up_, std::move(pkt));
    }

    static uint64_t unwrap(uint32_t wire, uint64_t near) {
        // Desk-scale transfers stay below 4 GB; extend by the high bits
        // of the nearby counter.
        uint64_t base = near & ~0xffffffffull;
        uint64_t v = base | wire;
        if (v + 0x80000000ull < near) v += 0x100000000ull;
        return v;
    }

    struct SegRecord {
        uint64_t end;
        SimTime sent;
        bool retx;
    };

    HostSpec src_, dst_;
    uint16_t sport_, dport_;
    SimTime stop_;

    // sender
    uint64_t snd_una_ = 0, snd_nxt_ = 0;
    double cwnd_ = 0;
    uint64_t ssthresh_ = kSsthreshInf;
    uint32_t dupacks_ = 0;
    bool in_recovery_ = false;
    uint64_t recover_ = 0;
    int64_t srtt_ns_ = -1, rttvar_ns_ = 0;
    int64_t backoff_ = 1;
    uint64_t rto_epoch_ = 0;
    std::deque<SegRecord> sent_;

    // receiver
    uint64_t rcv_nxt_ = 0;
    std::map<uint64_t, uint64_t> ooo_;
    uint32_t segs_since_ack_ = 0;
    uint64_t delack_epoch_ = 0;
};

// Isochronous sender; ignores loss entirely. rate is the application
// payload rate; one-way delay is sampled at the receiver.
class FixedRateFlow : public FlowBase {
  public:
    FixedRateFlow(Network& net, const FlowSpec& spec, uint32_t tag, bool up,
                  const HostSpec& src, const HostSpec& dst, uint16_t sport,
                  uint16_t dport)
        : FlowBase(net, spec, tag, up), src_(src), dst_(dst), sport_(sport),
          dport_(dport) {
        log_.type = "fixed";
    }

    void start() override {
        net_.register_endpoint(dst_.ip, dport_, Protocol::Udp, this);
        stop_ = net_.flow_stop_time(spec_);
        net_.ev().schedule(spec_.start, [this] { tick(); });
    }

    void on_packet(Packet&& pkt) override {
        note_rx(pkt.payload_len);
        const double ms = (net_.ev().now() - pkt.app_send_time).to_ms();
        log_.latency.push_back({net_.ev().now().to_seconds(), ms});
    }

  private:
    void tick() {
        if (net_.ev().now() >= stop_) return;
        Packet pkt;
        pkt.src_ip = src_.ip;
        pkt.dst_ip = dst_.ip;
        pkt.src_port = sport_;
        pkt.dst_port = dport_;
        pkt.protocol = Protocol::Udp;
        pkt.dscp = spec_.dscp;
        pkt.payload_len = spec_.packet_size;
        pkt.total_len = kUdpHdrTotal + spec_.packet_size;
        pkt.network_offset = kEthHdr;
        pkt.flow_tag = tag_;
        pkt.app_send_time = net_.ev().now();
        log_.total_tx_bytes += pkt.payload_len;
        net_.send(up_, std::move(pkt));

        // exact rational inter-packet spacing
        unsigned __int128 num =
            (unsigned __int128)spec_.packet_size * 8'000'000'000ull + rem_;
        const uint64_t gap = uint64_t(num / spec_.rate_bps);
        rem_ = uint64_t(num % spec_.rate_bps);
        net_.ev().schedule_in(SimTime::ns(int64_t(gap)), [this] { tick(); });
    }

    HostSpec src_, dst_;
    uint16_t sport_, dport_;
    SimTime stop_;
    uint64_t rem_ = 0;
};

// Sparse request/echo pair measuring round-trip time.
class PingFlow : public FlowBase {
  public:
    PingFlow(Network& net, const FlowSpec& spec, uint32_t tag, bool up,
             const HostSpec& src, const HostSpec& dst, uint16_t sport,
             uint16_t dport)
        : FlowBase(net, spec, tag, up), src_(src), dst_(dst), sport_(sport),
          dport_(dport) {
        log_.type = "ping";
    }

    void start() override {
        net_.register_endpoint(dst_.ip, dport_, Protocol::Udp, this); // request
        net_.register_endpoint(src_.ip, sport_, Protocol::Udp, this); // echo
        stop_ = net_.flow_stop_time(spec_);
        const SimTime jitter =
            SimTime::ns(int64_t(net_.rng().below(uint64_t(spec_.interval.count_ns()))));
        net_.ev().schedule(spec_.start + jitter, [this] { tick(); });
    }

    void on_packet(Packet&& pkt) override {
        if (pkt.dst_ip == dst_.ip && pkt.dst_port == dport_) {
            // reflector: echo with the same size, addressing reversed
            Packet echo;
            echo.src_ip = dst_.ip;
            echo.dst_ip = pkt.src_ip;
            echo.src_port = dport_;
            echo.dst_port = pkt.src_port;
            echo.protocol = Protocol::Udp;
            echo.dscp = pkt.dscp;
            echo.payload_len = pkt.payload_len;
            echo.total_len = pkt.total_len;
            echo.network_offset = pkt.network_offset;
            echo.flow_tag = tag_;
            echo.app_send_time = pkt.app_send_time;
            net_.send(!up_, std::move(echo));
        } else {
            note_rx(pkt.payload_len);
            const double ms = (net_.ev().now() - pkt.app_send_time).to_ms();
            log_.latency.push_back({net_.ev().now().to_seconds(), ms});
            rtt_acc_ms_ += ms;
            rtt_n_++;
        }
    }

    double rtt_sample_ms() override {
        if (rtt_n_ == 0) return -1;
        const double v = rtt_acc_ms_ / double(rtt_n_);
        rtt_acc_ms_ = 0;
        rtt_n_ = 0;
        return v;
    }

  private:
    void tick() {
        if (net_.ev().now() >= stop_) return;
        Packet pkt;
        pkt.src_ip = src_.ip;
        pkt.dst_ip = dst_.ip;
        pkt.src_port = sport_;
        pkt.dst_port = dport_;
        pkt.protocol = Protocol::Udp;
        pkt.dscp = spec_.dscp;
        pkt.total_len = std::max(spec_.size, kUdpHdrTotal + 8);
        pkt.payload_len = pkt.total_len - kUdpHdrTotal;
        pkt.network_offset = kEthHdr;
        pkt.flow_tag = tag_;
        pkt.app_send_time = net_.ev().now();
        log_.total_tx_bytes += pkt.payload_len;
        net_.send(up_, std::move(pkt));
        net_.ev().schedule_in(spec_.interval, [this] { tick(); });
    }

    HostSpec src_, dst_;
    uint16_t sport_, dport_;
    SimTime stop_;
    double rtt_acc_ms_ = 0;
    uint64_t rtt_n_ = 0;
};

Network::Network(const ScenarioConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
    validate_scenario(cfg_);

    if (cfg_.link.nat) {
        nat_ = std::make_unique<NatTable>(IpAddr::v4(192, 0, 2, 1));
    }

    const uint32_t salt_up = rng_.next_u32();
    const uint32_t salt_down = rng_.next_u32();

    auto q_up = make_qdisc(parse_qdisc_spec(cfg_.link.qdisc_up), salt_up, nat_.get());
    auto q_down =
        make_qdisc(parse_qdisc_spec(cfg_.link.qdisc_down), salt_down, nat_.get());

    up_ = std::make_unique<Pipe>(ev_, cfg_.link.rate_up_bps, cfg_.link.delay,
                                 std::move(q_up),
                                 [this](Packet&& p) { deliver(false, std::move(p)); });
    down_ = std::make_unique<Pipe>(ev_, cfg_.link.rate_down_bps, cfg_.link.delay,
                                   std::move(q_down),
                                   [this](Packet&& p) { deliver(true, std::move(p)); });

    auto attribute_drop = [this](const Packet& p, DropCause c) {
        if (p.flow_tag >= 1 && p.flow_tag <= flows_.size())
            flows_[p.flow_tag - 1]->note_drop(c);
    };
    up_->qdisc().set_drop_sink(attribute_drop);
    down_->qdisc().set_drop_sink(attribute_drop);

    uint16_t next_port = 10000;
    for (const auto& fs : cfg_.flows) {
        const HostSpec* src = cfg_.find_host(fs.src);
        const HostSpec* dst = cfg_.find_host(fs.dst);
        const bool up = src->lan;
        const uint32_t tag = uint32_t(flows_.size()) + 1;
        const uint16_t sport = next_port++;
        const uint16_t dport = next_port++;
        switch (fs.type) {
            case FlowType::Tcp:
                flows_.push_back(std::make_unique<TcpFlow>(*this, fs, tag, up, *src,
                                                           *dst, sport, dport));
                break;
            case FlowType::FixedRate:
                flows_.push_back(std::make_unique<FixedRateFlow>(*this, fs, tag, up,
                                                                 *src, *dst, sport,
                                                                 dport));
                break;
            case FlowType::Ping:
                flows_.push_back(std::make_unique<PingFlow>(*this, fs, tag, up, *src,
                                                            *dst, sport, dport));
                break;
        }
    }
}

void Network::metrics_tick() {
    const double t = ev_.now().to_seconds();
    const double dt = t - last_tick_s_;
    last_tick_s_ = t;
    for (auto& f : flows_) f->sample_interval(t, dt);
}

MetricsLog Network::run() {
    for (auto& f : flows_) f->start();

    const int64_t interval_ns = cfg_.metrics_interval.count_ns();
    for (int64_t at = interval_ns; at <= cfg_.duration.count_ns(); at += interval_ns) {
        ev_.schedule(SimTime::ns(at), [this] { metrics_tick(); });
    }

    ev_.run_until(cfg_.duration);

    MetricsLog log;
    log.seed = cfg_.seed;
    log.duration_s = cfg_.duration.to_seconds();
    log.metrics_interval_s = cfg_.metrics_interval.to_seconds();
    log.scenario_echo = serialize_scenario(cfg_);
    for (auto& f : flows_) log.flows.push_back(f->log());
    log.qdisc_up = up_->qdisc().stats();
    log.qdisc_down = down_->qdisc().stats();
    return log;
}

} // namespace

MetricsLog run_scenario(const ScenarioConfig& cfg) {
    Network net(cfg);
    return net.run();
}

} // namespace cakesim
