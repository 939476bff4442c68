#include "regionkit.h"
#include <stdio.h>
#include <string.h>

#define CHECK(cond)                                                     \
    do {                                                                \
        if (!(cond)) {                                                  \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond, \
                    rk_last_error());                                   \
            return 1;                                                   \
        }                                                               \
    } while (0)

int main(void) {
    char code[9];
    CHECK(rk_geohash_encode(0.0, 0.0, code) == RK_STATUS_OK);
    CHECK(strcmp(code, "s0000000") == 0);

    double series[3 * 48];
    for (int node = 0; node < 3; node++)
        for (int t = 0; t < 48; t++)
            series[node * 48 + t] = (t % 24 == 5 + node) ? 9.0 : (double)((t * (node + 2)) % 4);
    double acf = 0.0;
    CHECK(rk_acf(series, 48, 24, &acf) == RK_STATUS_OK);
    CHECK(rk_acf(NULL, 48, 24, &acf) == RK_STATUS_NULL_POINTER);

    double ts[3] = {1.0, 1.0, 1.0};
    double vs[3] = {1.0, 0.5, 0.0};
    RkProblem *problem = NULL;
    CHECK(rk_problem_new(3, 48, series, ts, vs, 2.0, 24, &problem) == RK_STATUS_OK);
    CHECK(rk_problem_add_edge(problem, 0, 1) == RK_STATUS_OK);
    CHECK(rk_problem_add_edge(problem, 1, 2) == RK_STATUS_OK);

    RkSolution *initial = NULL;
    CHECK(rk_d_balance(problem, 2, 0.05, 7, &initial) == RK_STATUS_OK);
    size_t assignment[3];
    CHECK(rk_solution_len(initial) == 3);
    CHECK(rk_solution_assignment(initial, assignment, 3) == RK_STATUS_OK);
    int feasible = 0;
    CHECK(rk_solution_objectives(initial, NULL, NULL, &feasible) == RK_STATUS_OK);
    CHECK(feasible == 1);

    const RkSolution *seeds[1] = {initial};
    RkParetoSet *set = NULL;
    CHECK(rk_co_optimize(problem, seeds, 1, 0.5, 100, 1, &set) == RK_STATUS_OK);
    CHECK(rk_pareto_len(set) >= 1);
    const RkSolution *best = NULL;
    CHECK(rk_pareto_get(set, 0, &best) == RK_STATUS_OK);
    CHECK(rk_solution_clusters(best) == 2);
    CHECK(rk_pareto_get(set, 99, &best) == RK_STATUS_OUT_OF_RANGE);

    rk_pareto_free(set);
    rk_solution_free(initial);
    rk_problem_free(problem);
    printf("ok\n");
    return 0;
}
