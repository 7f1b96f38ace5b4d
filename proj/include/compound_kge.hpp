#ifndef COMPOUND_KGE_HPP
#define COMPOUND_KGE_HPP

#include "compound_kge/transform.hpp"
#include "compound_kge/scoring.hpp"
#include "compound_kge/dataset.hpp"
#include "compound_kge/parallel.hpp"
#include "compound_kge/model.hpp"
#include "compound_kge/evaluation.hpp"
#include "compound_kge/training.hpp"
#include "compound_kge/diagnostics.hpp"
#include "compound_kge/synthetic.hpp"
#include "compound_kge/checkpoint.hpp"
#include "compound_kge/run_config.hpp"

#endif  // COMPOUND_KGE_HPP
