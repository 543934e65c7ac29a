// SPDX-License-Identifier: Apache-2.0
//
// Benchmark: serial campaign driver vs the OpenMP one, same master seed.
// The two must agree on every metric and every bug; only wall clock differs.

#include <cstring>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cgfuzz/campaign.hpp"
#include "cgfuzz/corpus.hpp"
#include "cgfuzz/seedgen.hpp"

using namespace cgfuzz;

int main(int argc, char** argv) {
    long tests = 2000;
    int threads = 0;
    for (int i = 1; i < argc; ++i) {
        if (!strcmp(argv[i], "--tests") && i + 1 < argc) tests = atol(argv[++i]);
        if (!strcmp(argv[i], "--threads") && i + 1 < argc) threads = atoi(argv[++i]);
    }
#ifdef _OPENMP
    if (threads <= 0) threads = omp_get_max_threads();
#else
    if (threads <= 0) threads = 1;
#endif

    auto patterns = extract_corpus(documented_corpus());
    SeedPool base;
    for (int i = 0; i < 200; ++i) {
        char id[32];
        snprintf(id, sizeof id, "seed-%06d", i);
        base.add_base(id, gen_seed(1000 + i));
    }

    CampaignConfig cfg;
    cfg.master_seed = 42;
    cfg.budget_tests = tests;
    cfg.mutant = "reorder_wrong_axis";  // something to find

    auto run = [&](int workers) {
        CampaignConfig c = cfg;
        c.workers = workers;
        SeedPool pool = base;
        return run_campaign(c, patterns, pool);
    };

    CampaignResult serial = run(1);
    CampaignResult parallel = run(threads);

    auto rate = [&](const CampaignResult& r) {
        return r.metrics.wall_seconds > 0 ? r.metrics.generated / r.metrics.wall_seconds : 0.0;
    };
    printf("%-10s %8s %10s %10s %8s\n", "driver", "tests", "seconds", "tests/s", "bugs");
    printf("%-10s %8ld %10.2f %10.0f %8ld\n", "serial", serial.metrics.generated,
           serial.metrics.wall_seconds, rate(serial), serial.metrics.distinct_bugs);
    printf("%-10s %8ld %10.2f %10.0f %8ld  (%d threads)\n", "openmp",
           parallel.metrics.generated, parallel.metrics.wall_seconds, rate(parallel),
           parallel.metrics.distinct_bugs, threads);
    printf("speedup: %.2fx\n", serial.metrics.wall_seconds /
                                   std::max(1e-9, parallel.metrics.wall_seconds));

    bool same = serial.metrics.generated == parallel.metrics.generated &&
                serial.metrics.valid == parallel.metrics.valid &&
                serial.reports.size() == parallel.reports.size();
    for (size_t i = 0; same && i < serial.reports.size(); ++i)
        same = serial.reports[i].dedup_key == parallel.reports[i].dedup_key;
    printf("serial/parallel agreement: %s\n", same ? "identical" : "DIVERGED");
    return same ? 0 : 1;
}
