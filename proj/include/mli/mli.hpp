#pragma once

#include "mli/engine.hpp"
#include "mli/error.hpp"
#include "mli/io.hpp"
#include "mli/learn/als.hpp"
#include "mli/learn/interfaces.hpp"
#include "mli/learn/kmeans.hpp"
#include "mli/learn/logistic.hpp"
#include "mli/learn/optimizer.hpp"
#include "mli/learn/serialization.hpp"
#include "mli/learn/text.hpp"
#include "mli/linalg.hpp"
#include "mli/local_matrix.hpp"
#include "mli/ml_table.hpp"
#include "mli/ml_value.hpp"
#include "mli/random.hpp"
