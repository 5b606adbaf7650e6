#pragma once

#include "a2lh/data.hpp"
#include "a2lh/error.hpp"
#include "a2lh/hash_function.hpp"
#include "a2lh/kernel.hpp"
#include "a2lh/linalg.hpp"
#include "a2lh/matrix_io.hpp"
#include "a2lh/optimizer.hpp"
#include "a2lh/pipeline.hpp"
#include "a2lh/retrieval.hpp"
#include "a2lh/rng.hpp"
#include "a2lh/similarity.hpp"
#include "a2lh/train.hpp"
