#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "pproute/comm.hpp"
#include "pproute/errors.hpp"
#include "pproute/ring.hpp"
#include "pproute/rng.hpp"

namespace pproute {

// Comparison backend: "circuit" runs the boolean borrow circuit online,
// "dealer_oracle" asks the dealer for the sign bit (2 rounds flat).
enum class CmpBackend { circuit, dealer_oracle };

const char *to_string(CmpBackend b);
CmpBackend backend_from_string(std::string_view s);

struct SessionConfig {
    Ring ring{};
    CmpBackend backend = CmpBackend::circuit;
    u64 seed = 1;
    u64 phase_limit = 1'000'000; // max message phases per party per session
    // Newton-Raphson iterations for reciprocal; 24 doublings cover bracket
    // ratios up to ~10^6 (softmax denominators go down to the eps floor)
    unsigned recip_iters = 24;
};

using Bytes = std::vector<std::uint8_t>;

// Correlated randomness, one party's half.
struct ArithTriple {
    u64 a = 0, b = 0, c = 0; // shares of a, b, c = a*b
};
struct BoolTripleW {
    u64 a = 0, b = 0, c = 0; // XOR shares of packed words, c = a & b
};
struct CmpRand {
    u64 r_arith = 0; // additive share of r
    u64 r_bits = 0;  // XOR share of the same r, used as a packed bit vector
};

enum class DealerOp : std::uint32_t { cmp_sign = 1 };

// deadlock is a protocol error with its own type so the engine can tell a
// primary failure from the secondary wakeup on the other thread
struct DeadlockError : ProtocolError {
    explicit DeadlockError(const std::string &m) : ProtocolError(m) {}
};

unsigned elem_bytes(const Ring &r);
Bytes pack_elems(std::span<const u64> v, unsigned eb);
std::vector<u64> unpack_elems(const Bytes &b, unsigned eb, u64 mask);

class Session;
class Dealer;
class PartyCtx;

namespace detail {

// Shared rendezvous state for the two party threads.  One mutex guards
// message queues, party states and dealer slots; deadlock detection runs
// whenever somebody blocks or finishes.
struct SyncCore {
    enum class St { running, wait_msg, wait_dealer, finished };

    std::mutex mu;
    std::condition_variable cv;
    St st[2] = {St::running, St::running};
    u64 dealer_seq[2] = {0, 0};
    std::deque<Bytes> inbox[2];
    bool dead = false;
    std::string dead_reason;

    void reset_for_run();
    void send_locked(int from, Bytes msg);
    Bytes recv(int p);
    void finish(int p);
    void check_deadlock_locked();
    void throw_dead() const;
};

struct PendingQuery {
    DealerOp op[2] = {};
    bool have[2] = {false, false};
    bool taken[2] = {false, false};
    bool done = false;
    std::string error;
    std::vector<u64> payload[2];
    std::vector<u64> resp[2];
};

template <class R> struct ResultBox {
    std::optional<R> v;
    template <class F> void call(F &f, PartyCtx &c) { v.emplace(f(c)); }
    R take() { return std::move(*v); }
};
template <> struct ResultBox<void> {
    template <class F> void call(F &f, PartyCtx &c) { f(c); }
    std::monostate take() { return {}; }
};

} // namespace detail

// Trusted dealer: hands out correlated randomness (offline) and answers
// online oracle queries that need both parties' payloads.
class Dealer {
  public:
    Dealer(const Ring &ring, u64 seed, detail::SyncCore *core);

    std::vector<ArithTriple> take_arith(int party, std::size_t n);
    std::vector<BoolTripleW> take_bool(int party, std::size_t n);
    std::vector<CmpRand> take_cmp_rand(int party, std::size_t n);

    // generate n fresh arithmetic triples and return both halves (test use)
    std::pair<std::vector<ArithTriple>, std::vector<ArithTriple>>
    sample_arith_pair(std::size_t n);

    // blocking oracle round-trip; pairs up with the other party's call
    std::vector<u64> query(int party, DealerOp op,
                           const std::vector<u64> &payload);

    u64 offline_bytes(int party) const;

  private:
    void gen_arith_locked();
    void gen_bool_locked();
    void gen_cmp_rand_locked();

    Ring ring_;
    Rng rng_;
    detail::SyncCore *core_;
    std::deque<ArithTriple> arith_[2];
    std::deque<BoolTripleW> bool_[2];
    std::deque<CmpRand> cmp_rand_[2];
    u64 next_seq_[2] = {0, 0};
    std::map<u64, detail::PendingQuery> pending_;
    u64 offline_bytes_[2] = {0, 0};
};

// One party's handle inside a running program.  All communication and
// randomness flows through here so metering and replay stay exact.
class PartyCtx {
  public:
    int party() const { return party_; }
    const Ring &ring() const;
    const SessionConfig &config() const;
    CmpBackend backend() const;
    Rng &rng() { return *rng_; }
    Session &session() { return *s_; }

    // One synchronous exchange: send payload, receive the peer's.  Both
    // parties must issue the same label in the same order.
    Bytes exchange(std::string_view label, const Bytes &payload);
    std::vector<u64> exchange_elems(std::string_view label,
                                    std::span<const u64> elems);

    // Online dealer round-trip (counts 2 rounds under the label).
    std::vector<u64> dealer_query(DealerOp op, std::string_view label,
                                  const std::vector<u64> &payload);

    std::vector<ArithTriple> take_arith_triples(std::size_t n);
    std::vector<BoolTripleW> take_bool_triples(std::size_t n);
    std::vector<CmpRand> take_cmp_rand(std::size_t n);

  private:
    friend class Session;
    Session *s_ = nullptr;
    int party_ = 0;
    u64 phase_ = 0;
    std::optional<Rng> rng_;
};

// A two-party session: SPMD party programs run on two threads in lock step.
// The session owns the dealer, the transport and all metering.
class Session {
  public:
    explicit Session(SessionConfig cfg);

    const SessionConfig &config() const { return cfg_; }
    const Ring &ring() const { return cfg_.ring; }
    Dealer &dealer() { return dealer_; }

    CommStats stats() const;
    u64 transcript(int party) const;

    // Run both programs to completion; returns their results.  Any party
    // exception is rethrown here (program errors win over deadlock echoes).
    template <class F0, class F1> auto run(F0 &&f0, F1 &&f1) {
        using R0 = std::invoke_result_t<F0 &, PartyCtx &>;
        using R1 = std::invoke_result_t<F1 &, PartyCtx &>;
        detail::ResultBox<R0> b0;
        detail::ResultBox<R1> b1;
        run_impl([&](PartyCtx &c) { b0.call(f0, c); },
                 [&](PartyCtx &c) { b1.call(f1, c); });
        return std::make_pair(b0.take(), b1.take());
    }

  private:
    friend class PartyCtx;
    void run_impl(std::function<void(PartyCtx &)> f0,
                  std::function<void(PartyCtx &)> f1);
    void meter_exchange(int p, std::string_view label, std::size_t sent);
    void meter_dealer(int p, std::string_view label, std::size_t up,
                      std::size_t down);
    void fold_transcript(int p, std::string_view label, const Bytes &payload);

    SessionConfig cfg_;
    detail::SyncCore core_;
    Dealer dealer_;
    PartyCtx ctx_[2];
    mutable std::mutex stats_mu_;
    CommStats stats_;
    u64 transcript_[2];
};

} // namespace pproute
