#pragma once

#include "chns/ch_step.hpp"
#include "chns/diagnostics.hpp"
#include "chns/dg_space.hpp"
#include "chns/forms.hpp"
#include "chns/manufactured.hpp"
#include "chns/mesh.hpp"
#include "chns/ns_step.hpp"
#include "chns/params.hpp"
#include "chns/quadrature.hpp"
#include "chns/sparse_linalg.hpp"
#include "chns/time_loop.hpp"
