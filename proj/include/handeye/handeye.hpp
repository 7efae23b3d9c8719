#ifndef HANDEYE_HANDEYE_HPP
#define HANDEYE_HANDEYE_HPP

// Umbrella header: AX = ZB calibration solvers, synthetic data and file I/O.

#include "handeye/closed_form.hpp"
#include "handeye/errors.hpp"
#include "handeye/io.hpp"
#include "handeye/linear.hpp"
#include "handeye/lsq.hpp"
#include "handeye/nonlinear.hpp"
#include "handeye/se3.hpp"
#include "handeye/simulate.hpp"
#include "handeye/types.hpp"

#endif  // HANDEYE_HANDEYE_HPP
