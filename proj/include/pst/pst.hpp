#pragma once

#include "pst/chain.hpp"
#include "pst/dynamics.hpp"
#include "pst/inverse_design.hpp"
#include "pst/io.hpp"
#include "pst/optimizer.hpp"
#include "pst/reachability.hpp"
#include "pst/spectral.hpp"
