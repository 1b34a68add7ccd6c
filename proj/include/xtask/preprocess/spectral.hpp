#pragma once

#include <span>
#include <string>

#include "xtask/core/types.hpp"

namespace xtask::preprocess {

/// Per channel: subtract the mean and divide by the population SD.
/// A channel with zero variance raises a preprocess error naming it.
SignalMatrix standardize(const SignalMatrix& window, std::span<const std::string> channel_names = {});

/// Frequency-domain resampling: the window's DFT is truncated to bins strictly
/// below the target Nyquist and inverse-transformed at the target length.
/// `rate` must be an integer multiple of `target_rate`.
SignalMatrix decimate(const SignalMatrix& window, double rate, double target_rate);

/// Zeroes every DFT bin whose |f| lies outside [low_hz, high_hz]; output real.
SignalMatrix fft_bandpass(const SignalMatrix& window, double rate, double low_hz, double high_hz);

}  // namespace xtask::preprocess
