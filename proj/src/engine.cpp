#include "pproute/engine.hpp"

#include <cstring>
#include <thread>

#include "pproute/log.hpp"

namespace pproute {

namespace {

constexpr u64 kFnvBasis = 1469598103934665603ULL;
constexpr u64 kFnvPrime = 1099511628211ULL;

u64 fnv_fold(u64 h, const void *data, std::size_t n) {
    auto *p = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

u64 fnv_str(std::string_view s) {
    return fnv_fold(kFnvBasis, s.data(), s.size());
}

const char *st_name(detail::SyncCore::St s) {
    switch (s) {
    case detail::SyncCore::St::running:
        return "running";
    case detail::SyncCore::St::wait_msg:
        return "waiting for message";
    case detail::SyncCore::St::wait_dealer:
        return "waiting at dealer";
    case detail::SyncCore::St::finished:
        return "finished";
    }
    return "?";
}

} // namespace

const char *to_string(CmpBackend b) {
    return b == CmpBackend::circuit ? "circuit" : "dealer-oracle";
}

CmpBackend backend_from_string(std::string_view s) {
    if (s == "circuit")
        return CmpBackend::circuit;
    if (s == "dealer-oracle" || s == "dealer_oracle")
        return CmpBackend::dealer_oracle;
    throw ConfigError("unknown comparison backend: " + std::string(s));
}

unsigned elem_bytes(const Ring &r) { return (r.l + 7) / 8; }

Bytes pack_elems(std::span<const u64> v, unsigned eb) {
    Bytes out(v.size() * eb);
    for (std::size_t i = 0; i < v.size(); ++i) {
        u64 x = v[i];
        for (unsigned b = 0; b < eb; ++b)
            out[i * eb + b] = std::uint8_t(x >> (8 * b));
    }
    return out;
}

std::vector<u64> unpack_elems(const Bytes &b, unsigned eb, u64 mask) {
    if (eb == 0 || b.size() % eb != 0)
        throw ProtocolError("unpack_elems: payload size not a multiple of "
                            "element width");
    std::vector<u64> out(b.size() / eb);
    for (std::size_t i = 0; i < out.size(); ++i) {
        u64 x = 0;
        for (unsigned k = 0; k < eb; ++k)
            x |= u64(b[i * eb + k]) << (8 * k);
        out[i] = x & mask;
    }
    return out;
}

// ---- SyncCore ----

namespace detail {

void SyncCore::reset_for_run() {
    std::lock_guard lk(mu);
    st[0] = st[1] = St::running;
    dead = false;
    dead_reason.clear();
    inbox[0].clear();
    inbox[1].clear();
}

void SyncCore::throw_dead() const {
    throw DeadlockError("deadlock detected: " + dead_reason);
}

void SyncCore::check_deadlock_locked() {
    if (dead)
        return;
    bool progress = false;
    for (int p = 0; p < 2; ++p) {
        if (st[p] == St::running)
            progress = true;
        else if (st[p] == St::wait_msg && !inbox[p].empty())
            progress = true;
    }
    if (progress)
        return;
    if (st[0] == St::finished && st[1] == St::finished)
        return; // clean end
    dead = true;
    dead_reason = std::string("party 0 ") + st_name(st[0]) + ", party 1 " +
                  st_name(st[1]);
    cv.notify_all();
}

void SyncCore::send_locked(int from, Bytes msg) {
    inbox[1 - from].push_back(std::move(msg));
    cv.notify_all();
}

Bytes SyncCore::recv(int p) {
    std::unique_lock lk(mu);
    for (;;) {
        if (dead)
            throw_dead();
        if (!inbox[p].empty()) {
            Bytes m = std::move(inbox[p].front());
            inbox[p].pop_front();
            st[p] = St::running;
            return m;
        }
        st[p] = St::wait_msg;
        check_deadlock_locked();
        if (dead) {
            st[p] = St::running;
            throw_dead();
        }
        cv.wait(lk);
        st[p] = St::running;
    }
}

void SyncCore::finish(int p) {
    std::lock_guard lk(mu);
    st[p] = St::finished;
    check_deadlock_locked();
    cv.notify_all();
}

} // namespace detail

// ---- Dealer ----

Dealer::Dealer(const Ring &ring, u64 seed, detail::SyncCore *core)
    : ring_(ring), rng_(mix_seed(seed, 0xdea1e5ULL)), core_(core) {}

void Dealer::gen_arith_locked() {
    u64 a = rng_.next_elem(ring_), b = rng_.next_elem(ring_);
    u64 c = ring_.mul(a, b);
    u64 a0 = rng_.next_elem(ring_), b0 = rng_.next_elem(ring_),
        c0 = rng_.next_elem(ring_);
    arith_[0].push_back({a0, b0, c0});
    arith_[1].push_back({ring_.sub(a, a0), ring_.sub(b, b0), ring_.sub(c, c0)});
}

void Dealer::gen_bool_locked() {
    u64 m = ring_.mask();
    u64 a = rng_.next_u64() & m, b = rng_.next_u64() & m;
    u64 c = a & b;
    u64 a0 = rng_.next_u64() & m, b0 = rng_.next_u64() & m,
        c0 = rng_.next_u64() & m;
    bool_[0].push_back({a0, b0, c0});
    bool_[1].push_back({a ^ a0, b ^ b0, c ^ c0});
}

void Dealer::gen_cmp_rand_locked() {
    // the same r in both encodings: additive share + XOR share of its bits
    u64 r = rng_.next_elem(ring_);
    u64 ra0 = rng_.next_elem(ring_);
    u64 rb0 = rng_.next_u64() & ring_.mask();
    cmp_rand_[0].push_back({ra0, rb0});
    cmp_rand_[1].push_back({ring_.sub(r, ra0), r ^ rb0});
}

std::vector<ArithTriple> Dealer::take_arith(int party, std::size_t n) {
    std::lock_guard lk(core_->mu);
    while (arith_[party].size() < n)
        gen_arith_locked();
    std::vector<ArithTriple> out(arith_[party].begin(),
                                 arith_[party].begin() + long(n));
    arith_[party].erase(arith_[party].begin(), arith_[party].begin() + long(n));
    offline_bytes_[party] += n * 3ull * elem_bytes(ring_);
    return out;
}

std::vector<BoolTripleW> Dealer::take_bool(int party, std::size_t n) {
    std::lock_guard lk(core_->mu);
    while (bool_[party].size() < n)
        gen_bool_locked();
    std::vector<BoolTripleW> out(bool_[party].begin(),
                                 bool_[party].begin() + long(n));
    bool_[party].erase(bool_[party].begin(), bool_[party].begin() + long(n));
    offline_bytes_[party] += n * 3ull * elem_bytes(ring_);
    return out;
}

std::vector<CmpRand> Dealer::take_cmp_rand(int party, std::size_t n) {
    std::lock_guard lk(core_->mu);
    while (cmp_rand_[party].size() < n)
        gen_cmp_rand_locked();
    std::vector<CmpRand> out(cmp_rand_[party].begin(),
                             cmp_rand_[party].begin() + long(n));
    cmp_rand_[party].erase(cmp_rand_[party].begin(),
                           cmp_rand_[party].begin() + long(n));
    offline_bytes_[party] += n * 2ull * elem_bytes(ring_);
    return out;
}

std::pair<std::vector<ArithTriple>, std::vector<ArithTriple>>
Dealer::sample_arith_pair(std::size_t n) {
    std::lock_guard lk(core_->mu);
    std::size_t have = std::min(arith_[0].size(), arith_[1].size());
    while (have < n) {
        gen_arith_locked();
        ++have;
    }
    auto take = [&](int p) {
        std::vector<ArithTriple> v(arith_[p].begin(),
                                   arith_[p].begin() + long(n));
        arith_[p].erase(arith_[p].begin(), arith_[p].begin() + long(n));
        return v;
    };
    return {take(0), take(1)};
}

u64 Dealer::offline_bytes(int party) const { return offline_bytes_[party]; }

std::vector<u64> Dealer::query(int party, DealerOp op,
                               const std::vector<u64> &payload) {
    std::unique_lock lk(core_->mu);
    u64 seq = next_seq_[party]++;
    auto &slot = pending_[seq];
    slot.op[party] = op;
    slot.payload[party] = payload;
    slot.have[party] = true;

    if (slot.have[0] && slot.have[1]) {
        if (slot.op[0] != slot.op[1])
            slot.error = "dealer query op mismatch";
        else if (slot.payload[0].size() != slot.payload[1].size())
            slot.error = "dealer query size mismatch";
        else {
            switch (op) {
            case DealerOp::cmp_sign: {
                std::size_t n = slot.payload[0].size();
                slot.resp[0].resize(n);
                slot.resp[1].resize(n);
                for (std::size_t i = 0; i < n; ++i) {
                    u64 z = ring_.add(slot.payload[0][i], slot.payload[1][i]);
                    u64 bit = ring_.msb(z);
                    u64 h0 = rng_.next_elem(ring_);
                    slot.resp[0][i] = h0;
                    slot.resp[1][i] = ring_.sub(bit, h0);
                }
                break;
            }
            }
        }
        slot.done = true;
        // the partner is satisfied the moment the slot completes; clear its
        // wait state here so a deadlock check cannot catch it stale between
        // notify and wakeup
        int other = 1 - party;
        if (core_->st[other] == detail::SyncCore::St::wait_dealer &&
            core_->dealer_seq[other] == seq)
            core_->st[other] = detail::SyncCore::St::running;
        core_->cv.notify_all();
    } else {
        core_->st[party] = detail::SyncCore::St::wait_dealer;
        core_->dealer_seq[party] = seq;
        core_->check_deadlock_locked();
        while (!slot.done && !core_->dead)
            core_->cv.wait(lk);
        core_->st[party] = detail::SyncCore::St::running;
        if (!slot.done && core_->dead)
            core_->throw_dead();
    }

    if (!slot.error.empty()) {
        std::string err = slot.error;
        slot.taken[party] = true;
        if (slot.taken[0] && slot.taken[1])
            pending_.erase(seq);
        throw ProtocolError(err);
    }
    std::vector<u64> out = std::move(slot.resp[party]);
    slot.taken[party] = true;
    if (slot.taken[0] && slot.taken[1])
        pending_.erase(seq);
    return out;
}

// ---- PartyCtx ----

const Ring &PartyCtx::ring() const { return s_->ring(); }
const SessionConfig &PartyCtx::config() const { return s_->config(); }
CmpBackend PartyCtx::backend() const { return s_->config().backend; }

Bytes PartyCtx::exchange(std::string_view label, const Bytes &payload) {
    auto &core = s_->core_;
    ++phase_;
    if (phase_ > s_->config().phase_limit)
        throw ProtocolError("phase limit exceeded (" +
                            std::to_string(s_->config().phase_limit) + ")");
    // wire header: label hash + phase index, so schedule skew fails loudly
    u64 lh = fnv_str(label);
    Bytes msg(16 + payload.size());
    std::memcpy(msg.data(), &lh, 8);
    std::memcpy(msg.data() + 8, &phase_, 8);
    std::memcpy(msg.data() + 16, payload.data(), payload.size());
    {
        std::lock_guard lk(core.mu);
        core.send_locked(party_, std::move(msg));
    }
    Bytes in = core.recv(party_);
    if (in.size() < 16)
        throw ProtocolError("malformed message");
    u64 in_lh, in_phase;
    std::memcpy(&in_lh, in.data(), 8);
    std::memcpy(&in_phase, in.data() + 8, 8);
    if (in_lh != lh || in_phase != phase_)
        throw ProtocolError("phase mismatch at '" + std::string(label) +
                            "': parties are not in lock step");
    s_->meter_exchange(party_, label, payload.size());
    s_->fold_transcript(party_, label, payload);
    if (log::level() == log::Level::trace)
        log::trace("p" + std::to_string(party_) + " phase " +
                   std::to_string(phase_) + " '" + std::string(label) +
                   "' sent=" + std::to_string(payload.size()) + "B recv=" +
                   std::to_string(in.size() - 16) + "B");
    return Bytes(in.begin() + 16, in.end());
}

std::vector<u64> PartyCtx::exchange_elems(std::string_view label,
                                          std::span<const u64> elems) {
    unsigned eb = elem_bytes(ring());
    Bytes in = exchange(label, pack_elems(elems, eb));
    return unpack_elems(in, eb, ring().mask());
}

std::vector<u64> PartyCtx::dealer_query(DealerOp op, std::string_view label,
                                        const std::vector<u64> &payload) {
    phase_ += 2;
    if (phase_ > s_->config().phase_limit)
        throw ProtocolError("phase limit exceeded (" +
                            std::to_string(s_->config().phase_limit) + ")");
    auto resp = s_->dealer_.query(party_, op, payload);
    unsigned eb = elem_bytes(ring());
    s_->meter_dealer(party_, label, payload.size() * eb, resp.size() * eb);
    s_->fold_transcript(party_, label, pack_elems(payload, eb));
    return resp;
}

std::vector<ArithTriple> PartyCtx::take_arith_triples(std::size_t n) {
    return s_->dealer_.take_arith(party_, n);
}
std::vector<BoolTripleW> PartyCtx::take_bool_triples(std::size_t n) {
    return s_->dealer_.take_bool(party_, n);
}
std::vector<CmpRand> PartyCtx::take_cmp_rand(std::size_t n) {
    return s_->dealer_.take_cmp_rand(party_, n);
}

// ---- Session ----

Session::Session(SessionConfig cfg)
    : cfg_(cfg), dealer_(cfg.ring, cfg.seed, &core_) {
    cfg_.ring.check();
    for (int p = 0; p < 2; ++p) {
        ctx_[p].s_ = this;
        ctx_[p].party_ = p;
        ctx_[p].rng_.emplace(mix_seed(cfg_.seed, 0x7a11ULL + u64(p)));
        transcript_[p] = kFnvBasis;
    }
}

CommStats Session::stats() const {
    std::lock_guard lk(stats_mu_);
    CommStats s = stats_;
    s.dealer_offline_bytes[0] = dealer_.offline_bytes(0);
    s.dealer_offline_bytes[1] = dealer_.offline_bytes(1);
    return s;
}

u64 Session::transcript(int party) const {
    std::lock_guard lk(stats_mu_);
    return transcript_[party];
}

void Session::meter_exchange(int p, std::string_view label, std::size_t sent) {
    std::lock_guard lk(stats_mu_);
    stats_.rounds[p] += 1;
    stats_.bytes[p] += sent;
    auto &ls = stats_.by_label[std::string(label)];
    ls.rounds[p] += 1;
    ls.bytes[p] += sent;
}

void Session::meter_dealer(int p, std::string_view label, std::size_t up,
                           std::size_t down) {
    std::lock_guard lk(stats_mu_);
    stats_.rounds[p] += 2;
    stats_.dealer_online_bytes[p] += up + down;
    auto &ls = stats_.by_label[std::string(label)];
    ls.rounds[p] += 2;
}

void Session::fold_transcript(int p, std::string_view label,
                              const Bytes &payload) {
    std::lock_guard lk(stats_mu_);
    u64 h = transcript_[p];
    h = fnv_fold(h, label.data(), label.size());
    h = fnv_fold(h, payload.data(), payload.size());
    transcript_[p] = h;
}

void Session::run_impl(std::function<void(PartyCtx &)> f0,
                       std::function<void(PartyCtx &)> f1) {
    core_.reset_for_run();
    std::exception_ptr ex[2];
    auto body = [&](int p, std::function<void(PartyCtx &)> &f) {
        try {
            f(ctx_[p]);
        } catch (...) {
            ex[p] = std::current_exception();
        }
        core_.finish(p);
    };
    std::thread t0(body, 0, std::ref(f0));
    std::thread t1(body, 1, std::ref(f1));
    t0.join();
    t1.join();

    auto is_deadlock = [](const std::exception_ptr &e) {
        try {
            std::rethrow_exception(e);
        } catch (const DeadlockError &) {
            return true;
        } catch (...) {
            return false;
        }
    };
    // a real program error beats the secondary deadlock it caused
    for (int p = 0; p < 2; ++p)
        if (ex[p] && !is_deadlock(ex[p]))
            std::rethrow_exception(ex[p]);
    for (int p = 0; p < 2; ++p)
        if (ex[p])
            std::rethrow_exception(ex[p]);

    if (!core_.inbox[0].empty() || !core_.inbox[1].empty())
        throw ProtocolError("unconsumed messages at end of run");
    {
        std::lock_guard lk(stats_mu_);
        if (stats_.rounds[0] != stats_.rounds[1])
            throw ProtocolError("round counters diverged between parties");
    }
}

} // namespace pproute
