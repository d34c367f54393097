#pragma once

#include "ademu/time_point.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ademu {

/// Fibonacci LFSR. Tap positions are 1-based (position `width` is the MSB);
/// each shift moves the state left and inserts the XOR of the tapped bits.
class Lfsr {
public:
    Lfsr(int width = 31, std::vector<int> taps = {31, 28}, std::uint64_t seed = 1);

    /// Shift once and return the full new state.
    std::uint64_t next();
    /// Exact inverse of next().
    void step_back();
    /// k successive output bits (the inserted bit of each shift), first bit in
    /// the MSB of the result. k <= 64.
    std::uint64_t next_bits(int k);

    std::uint64_t state() const { return state_; }
    int width() const { return width_; }
    const std::vector<int>& taps() const { return taps_; }

    /// Maximal-length taps for widths 2..20 and 31.
    static std::vector<int> maximal_taps(int width);

private:
    int width_;
    std::vector<int> taps_;
    std::uint64_t tap_mask_ = 0;
    std::uint64_t mask_;
    std::uint64_t state_;
};

/// Where jitter samples land on a multi-phase clock.
enum class JitterPlacement {
    period,     ///< one sample per period, on the period-completing phase
    every_phase ///< an independent sample on every phase increment
};

/// One clock module: next-edge bookkeeping, rotating phase select and LFSR
/// period jitter.
///
/// A period P with p phases advances by floor(P/p) per phase; the phase that
/// completes the period takes the remainder plus one jitter sample.
class EmulatedClock {
public:
    EmulatedClock(std::string name, TimePoint period, int phases, TimePoint jitter, Lfsr lfsr, TimePoint first_edge,
                  int jitter_bits = 24);

    const std::string& name() const { return name_; }
    TimePoint next_edge() const { return next_edge_; }
    TimePoint period() const { return period_; }
    TimePoint jitter() const { return jitter_; }
    int phase_count() const { return phases_; }
    /// Phase that fires at next_edge().
    int next_phase() const { return phase_; }

    /// Uniform draw on the quantum grid of [-J, +J].
    TimePoint sample_jitter();

    /// Returns the phase fired at `granted`, or -1 when granted < next_edge.
    int step(TimePoint granted);

    /// New period for increments computed after the already committed edge.
    void set_period(TimePoint p);
    /// One-shot offset added to the next increment (proportional CDR path).
    void nudge(TimePoint delta) { pending_nudge_ += delta; }

    /// every_phase needs 2J below the phase spacing.
    void set_jitter_placement(JitterPlacement p);
    JitterPlacement jitter_placement() const { return placement_; }

private:
    std::string name_;
    TimePoint period_;
    int phases_;
    TimePoint jitter_;
    Lfsr lfsr_;
    TimePoint next_edge_;
    int jitter_bits_;
    int phase_ = 0;
    TimePoint pending_nudge_;
    JitterPlacement placement_ = JitterPlacement::period;

    void check_jitter(TimePoint period) const;
};

struct EdgeEvent {
    std::size_t clock = 0;
    int phase = 0;
};

struct Cycle {
    TimePoint t;
    std::vector<EdgeEvent> edges;
};

/// Picks the earliest pending edge across all clocks each emulation cycle and
/// fires every clock tied at that time.
class TimeManager {
public:
    explicit TimeManager(int time_exp = kDefaultTimeExp) : now_(TimePoint::zero(time_exp)) {}

    std::size_t add_clock(EmulatedClock clk);
    EmulatedClock& clock(std::size_t i) { return clocks_.at(i); }
    const EmulatedClock& clock(std::size_t i) const { return clocks_.at(i); }
    std::size_t clock_count() const { return clocks_.size(); }

    /// One emulation cycle. The returned reference is valid until the next call.
    const Cycle& advance();

    TimePoint now() const { return now_; }
    std::uint64_t cycle_count() const { return cycles_; }

private:
    std::vector<EmulatedClock> clocks_;
    TimePoint now_;
    std::uint64_t cycles_ = 0;
    Cycle cycle_;
};

} // namespace ademu
