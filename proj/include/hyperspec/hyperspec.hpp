#pragma once

// Umbrella header.

#include "hyperspec/bounds.hpp"
#include "hyperspec/compose.hpp"
#include "hyperspec/dnf.hpp"
#include "hyperspec/errors.hpp"
#include "hyperspec/exact.hpp"
#include "hyperspec/fourier_motzkin.hpp"
#include "hyperspec/gadgets.hpp"
#include "hyperspec/graph.hpp"
#include "hyperspec/io.hpp"
#include "hyperspec/lower.hpp"
#include "hyperspec/oracle.hpp"
#include "hyperspec/rational.hpp"
#include "hyperspec/simplex.hpp"
#include "hyperspec/specs.hpp"
#include "hyperspec/tensor.hpp"
#include "hyperspec/verify.hpp"
#include "hyperspec/version.hpp"
