#pragma once

// Umbrella header for the Givens coordinate-minimization library.

#include "givens/errors.hpp"
#include "givens/flops.hpp"
#include "givens/matrix.hpp"
#include "givens/rotation.hpp"
#include "givens/orthogonal.hpp"
#include "givens/line_search.hpp"
#include "givens/objective.hpp"
#include "givens/minimize.hpp"
#include "givens/spca.hpp"
#include "givens/streaming.hpp"
#include "givens/tensor.hpp"
#include "givens/gmm.hpp"
#include "givens/io.hpp"
