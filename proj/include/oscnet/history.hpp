#ifndef OSCNET_HISTORY_HPP
#define OSCNET_HISTORY_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "oscnet/errors.hpp"

namespace oscnet {

// Fixed-step ring buffer of past samples of one scalar signal.
// push() is called once per integrator step with a strictly increasing
// time stamp; sample() interpolates linearly between the two bracketing
// entries and is exact at the stored times. Single-writer, one buffer
// per oscillator per run.
class HistoryBuffer {
  public:
    HistoryBuffer() = default;

    // `horizon` is the oldest age that must stay reachable; a couple of
    // extra slots guard against round-off at the window edge.
    HistoryBuffer(double step, double horizon)
        : step_(step), cap_(static_cast<std::size_t>(std::ceil(horizon / step)) + 4),
          buf_(cap_) {
        if (step <= 0.0) throw config_error("HistoryBuffer: step must be > 0");
    }

    void push(double t, double value) {
        head_ = (head_ + 1) % cap_;
        buf_[head_] = value;
        t_latest_ = t;
        if (size_ < cap_) ++size_;
    }

    bool empty() const { return size_ == 0; }
    double latest_time() const { return t_latest_; }
    double latest() const { return buf_[head_]; }
    double window() const { return step_ * static_cast<double>(size_ - 1); }

    // Value at past time t_query. Exact at stored sample times, linear
    // in between. Ages older than the window (beyond a half-step of
    // slack) signal that the configured delay exceeds the horizon.
    double sample(double t_query) const {
        const double age = t_latest_ - t_query;
        if (age <= 0.0) return buf_[head_]; // t_query at (or past) the head
        double k = age / step_;
        const double kmax = static_cast<double>(size_ - 1);
        if (k > kmax + 0.5)
            throw out_of_window_error(
                "history lookup at age " + std::to_string(age) +
                " s exceeds stored window " + std::to_string(window()) + " s");
        if (k > kmax) k = kmax;
        const auto i0 = static_cast<std::size_t>(k);
        const double frac = k - static_cast<double>(i0);
        const double v0 = at_age(i0);
        if (frac == 0.0) return v0;
        const double v1 = at_age(i0 + 1);
        return v0 + frac * (v1 - v0);
    }

  private:
    double at_age(std::size_t steps_back) const {
        if (steps_back >= size_) steps_back = size_ - 1;
        return buf_[(head_ + cap_ - steps_back) % cap_];
    }

    double step_ = 1.0;
    std::size_t cap_ = 1;
    std::vector<double> buf_;
    std::size_t size_ = 0;
    std::size_t head_ = 0;
    double t_latest_ = 0.0;
};

} // namespace oscnet

#endif
