#pragma once

#include "schatten_lab/alignment.hpp"
#include "schatten_lab/errors.hpp"
#include "schatten_lab/gauge.hpp"
#include "schatten_lab/io.hpp"
#include "schatten_lab/linalg.hpp"
#include "schatten_lab/matrix.hpp"
#include "schatten_lab/recovery.hpp"
#include "schatten_lab/rng.hpp"
#include "schatten_lab/verifier.hpp"
