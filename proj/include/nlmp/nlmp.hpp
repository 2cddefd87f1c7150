#pragma once

#include "nlmp/error.hpp"
#include "nlmp/quadrature.hpp"
#include "nlmp/kernels.hpp"
#include "nlmp/fem.hpp"
#include "nlmp/assembly.hpp"
#include "nlmp/energy.hpp"
#include "nlmp/mountain_pass.hpp"
#include "nlmp/verify.hpp"
#include "nlmp/config.hpp"
