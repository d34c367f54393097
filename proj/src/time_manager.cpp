#include "ademu/time_manager.hpp"

#include "ademu/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

namespace ademu {

// --- LFSR --------------------------------------------------------------------

Lfsr::Lfsr(int width, std::vector<int> taps, std::uint64_t seed) : width_(width), taps_(std::move(taps))
{
    if (width_ < 2 || width_ > 63)
        throw ContractViolation("lfsr: width must be in [2, 63]");
    mask_ = (std::uint64_t{1} << width_) - 1;
    if (std::find(taps_.begin(), taps_.end(), width_) == taps_.end())
        throw ContractViolation("lfsr: taps must include the register width");
    for (int p : taps_) {
        if (p < 1 || p > width_)
            throw ContractViolation("lfsr: tap position out of range");
        tap_mask_ |= std::uint64_t{1} << (p - 1);
    }
    state_ = seed & mask_;
    if (state_ == 0)
        throw ContractViolation("lfsr: seed must be nonzero within the register width");
}

std::uint64_t Lfsr::next()
{
    const auto fb = static_cast<std::uint64_t>(std::popcount(state_ & tap_mask_) & 1);
    state_ = ((state_ << 1) | fb) & mask_;
    return state_;
}

void Lfsr::step_back()
{
    // old MSB = new LSB xor the other tapped bits, which now sit one position up
    const std::uint64_t others = (tap_mask_ & ~(std::uint64_t{1} << (width_ - 1))) << 1;
    const auto msb = static_cast<std::uint64_t>(std::popcount(state_ & (others | 1u)) & 1);
    state_ = (state_ >> 1) | (msb << (width_ - 1));
}

std::uint64_t Lfsr::next_bits(int k)
{
    if (k < 0 || k > 64)
        throw ContractViolation("lfsr: next_bits needs 0 <= k <= 64");
    std::uint64_t r = 0;
    for (int i = 0; i < k; ++i)
        r = (r << 1) | (next() & 1u);
    return r;
}

std::vector<int> Lfsr::maximal_taps(int width)
{
    static const std::map<int, std::vector<int>> table = {
        {2, {2, 1}},          {3, {3, 2}},          {4, {4, 3}},          {5, {5, 3}},
        {6, {6, 5}},          {7, {7, 6}},          {8, {8, 6, 5, 4}},    {9, {9, 5}},
        {10, {10, 7}},        {11, {11, 9}},        {12, {12, 6, 4, 1}},  {13, {13, 4, 3, 1}},
        {14, {14, 5, 3, 1}},  {15, {15, 14}},       {16, {16, 15, 13, 4}}, {17, {17, 14}},
        {18, {18, 11}},       {19, {19, 6, 2, 1}},  {20, {20, 17}},       {31, {31, 28}},
    };
    const auto it = table.find(width);
    if (it == table.end())
        throw ContractViolation("lfsr: no maximal tap set tabulated for width " + std::to_string(width));
    return it->second;
}

// --- clock -------------------------------------------------------------------

EmulatedClock::EmulatedClock(std::string name, TimePoint period, int phases, TimePoint jitter, Lfsr lfsr,
                             TimePoint first_edge, int jitter_bits)
    : name_(std::move(name)), period_(period), phases_(phases), jitter_(jitter), lfsr_(std::move(lfsr)),
      next_edge_(first_edge), jitter_bits_(jitter_bits), pending_nudge_(TimePoint::zero(period.scale_exp))
{
    if (phases_ < 1)
        throw ContractViolation("clock " + name_ + ": need at least one phase");
    if (period_.mantissa < phases_)
        throw ContractViolation("clock " + name_ + ": period too short");
    check_jitter(period_);
    if (jitter_bits_ < 1 || jitter_bits_ > 62)
        throw ContractViolation("clock " + name_ + ": jitter_bits must be in [1, 62]");
}

void EmulatedClock::check_jitter(TimePoint period) const
{
    const std::int64_t span = placement_ == JitterPlacement::every_phase ? period.mantissa / phases_ : period.mantissa;
    if (jitter_.mantissa < 0 || 2 * jitter_.mantissa >= span)
        throw ContractViolation("clock " + name_ + (placement_ == JitterPlacement::every_phase
                                                        ? ": need 0 <= J < phase spacing/2"
                                                        : ": need 0 <= J < period/2"));
}

void EmulatedClock::set_jitter_placement(JitterPlacement p)
{
    const JitterPlacement old = placement_;
    placement_ = p;
    try {
        check_jitter(period_);
    } catch (...) {
        placement_ = old;
        throw;
    }
}

TimePoint EmulatedClock::sample_jitter()
{
    if (jitter_.mantissa == 0)
        return TimePoint::zero(jitter_.scale_exp);
    const std::uint64_t r = lfsr_.next_bits(jitter_bits_);
    const std::uint64_t top = (std::uint64_t{1} << jitter_bits_) - 1;
    const auto span = static_cast<__int128>(2 * jitter_.mantissa);
    // round(r * 2J / top) in integers
    const __int128 q = (static_cast<__int128>(r) * span * 2 + top) / (2 * static_cast<__int128>(top));
    return {static_cast<std::int64_t>(q) - jitter_.mantissa, jitter_.scale_exp};
}

int EmulatedClock::step(TimePoint granted)
{
    if (granted > next_edge_)
        throw ContractViolation("clock " + name_ + ": edge at " + std::to_string(next_edge_.to_ns()) +
                                " ns skipped");
    if (granted < next_edge_)
        return -1;
    const int fired = phase_;
    const std::int64_t per_phase = period_.mantissa / phases_;
    TimePoint inc{per_phase, period_.scale_exp};
    if (fired == phases_ - 1)
        inc.mantissa = period_.mantissa - per_phase * (phases_ - 1);
    if (fired == phases_ - 1 || placement_ == JitterPlacement::every_phase)
        inc += sample_jitter();
    inc += pending_nudge_;
    pending_nudge_.mantissa = 0;
    if (inc.mantissa <= 0)
        throw ContractViolation("clock " + name_ + ": non-positive edge increment");
    next_edge_ += inc;
    phase_ = (phase_ + 1) % phases_;
    return fired;
}

void EmulatedClock::set_period(TimePoint p)
{
    if (p.mantissa < phases_)
        throw ContractViolation("clock " + name_ + ": period must be positive");
    check_jitter(p);
    period_ = p;
}

// --- time manager ------------------------------------------------------------

std::size_t TimeManager::add_clock(EmulatedClock clk)
{
    if (clk.next_edge() <= now_ && cycles_ > 0)
        throw ContractViolation("time manager: clock's first edge is in the past");
    clocks_.push_back(std::move(clk));
    return clocks_.size() - 1;
}

const Cycle& TimeManager::advance()
{
    if (clocks_.empty())
        throw ContractViolation("time manager: no clocks registered");
    TimePoint t = clocks_.front().next_edge();
    for (const auto& c : clocks_)
        t = std::min(t, c.next_edge());
    if (cycles_ > 0 && t <= now_)
        throw ContractViolation("time manager: emulated time did not advance");
    now_ = t;
    ++cycles_;
    cycle_.t = t;
    cycle_.edges.clear();
    for (std::size_t i = 0; i < clocks_.size(); ++i) {
        const int ph = clocks_[i].step(t);
        if (ph >= 0)
            cycle_.edges.push_back({i, ph});
    }
    return cycle_;
}

} // namespace ademu
