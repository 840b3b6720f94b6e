#ifndef SPEARMIX_SPEARMIX_HPP
#define SPEARMIX_SPEARMIX_HPP

#include "spearmix/common.hpp"
#include "spearmix/count_cache.hpp"
#include "spearmix/csv_io.hpp"
#include "spearmix/distance_counts.hpp"
#include "spearmix/log_bessel.hpp"
#include "spearmix/mixture.hpp"
#include "spearmix/mms.hpp"
#include "spearmix/partition.hpp"
#include "spearmix/ranking.hpp"
#include "spearmix/rate_function.hpp"
#include "spearmix/simulation.hpp"

#endif // SPEARMIX_SPEARMIX_HPP
