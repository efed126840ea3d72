/*
 * C interface to the RAPM option pricing library.
 *
 * All objects are opaque handles created by rapm_*_create / rapm_solve and
 * released by the matching *_destroy function. Every fallible call returns a
 * rapm_status; on failure rapm_last_error() describes the problem for the
 * calling thread. Handles are immutable after creation and may be shared
 * between threads.
 */
#ifndef RAPM_RAPM_H
#define RAPM_RAPM_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(RAPM_BUILDING_LIBRARY)
#    define RAPM_API __declspec(dllexport)
#  else
#    define RAPM_API __declspec(dllimport)
#  endif
#else
#  define RAPM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define RAPM_ABI_VERSION 1

typedef enum rapm_status {
    RAPM_OK = 0,
    RAPM_ERR_INVALID_ARGUMENT = 1,  /* null pointer, bad enum, short buffer */
    RAPM_ERR_INVALID_PARAMETER = 2,
    RAPM_ERR_EXISTENCE_A = 3,       /* C >= sigma^2 M T */
    RAPM_ERR_EXISTENCE_B = 4,       /* C M >= pi / 8 */
    RAPM_ERR_NONPOSITIVE_SPOT = 5,
    RAPM_ERR_DEGENERATE_SWITCH = 6,
    RAPM_ERR_INVALID_SPACING = 7,
    RAPM_ERR_OUT_OF_RANGE = 8,
    RAPM_ERR_INVALID_SIZE = 9,
    RAPM_ERR_SINGULAR_MASS = 10,
    RAPM_ERR_LINEAR_SOLVE = 11,
    RAPM_ERR_NONFINITE_STATE = 12,
    RAPM_ERR_SPOT_OUT_OF_DOMAIN = 13,
    RAPM_ERR_INTERNAL = 99
} rapm_status;

typedef enum rapm_element_order { RAPM_P1 = 1, RAPM_P2 = 2 } rapm_element_order;
typedef enum rapm_nonlinearity { RAPM_GROUP_FE = 0, RAPM_QUADRATURE = 1 } rapm_nonlinearity;
typedef enum rapm_mass_mode { RAPM_MASS_LUMPED = 0, RAPM_MASS_CONSISTENT = 1 } rapm_mass_mode;
typedef enum rapm_power_mode { RAPM_POWER_SIGNED = 0, RAPM_POWER_CLAMPED = 1 } rapm_power_mode;
typedef enum rapm_boundary_v { RAPM_BOUNDARY_V_COPY = 0, RAPM_BOUNDARY_V_EXTRAPOLATE = 1 } rapm_boundary_v;

typedef struct rapm_params rapm_params;
typedef struct rapm_surface rapm_surface;

typedef struct rapm_derived {
    double t_star;
    double tau_star;
    double tau_max;
    double d_coeff;
    double c_r;
} rapm_derived;

/* Discretization settings shared by the element and finite-difference solvers. */
typedef struct rapm_solver_options {
    double radius;            /* truncated domain [-radius, radius] in ln(S/K) */
    double dx;                /* element (grid) spacing */
    double dtau;              /* macro time step in transformed time */
    double theta;             /* 0.5 = Crank-Nicolson */
    int rannacher_substeps;   /* backward Euler substeps replacing the first step */
    rapm_element_order order;
    rapm_nonlinearity nonlinearity;
    rapm_mass_mode mass;
    rapm_power_mode power;
    rapm_boundary_v boundary_v;
} rapm_solver_options;

typedef struct rapm_diagnostics {
    double dx;
    double dtau;
    size_t steps;
    double dtau_over_dx2;
    double max_abs_v;
    size_t node_count;
} rapm_diagnostics;

RAPM_API int rapm_abi_version(void);
RAPM_API const char* rapm_status_string(rapm_status status);
/* Message of the last failure on this thread; empty if none. */
RAPM_API const char* rapm_last_error(void);

RAPM_API rapm_status rapm_params_create(double rate, double sigma, double strike,
                                        double expiry, double risk_premium,
                                        double txn_cost, rapm_params** out);
RAPM_API void rapm_params_destroy(rapm_params* params);
RAPM_API rapm_status rapm_params_derived(const rapm_params* params, rapm_derived* out);
RAPM_API rapm_status rapm_bs_call_price(const rapm_params* params, double spot,
                                        double time, double* out);

/* Fills defaults: radius 3, dx 0.01, dtau 0.0005, theta 0.5, 4 substeps, P1,
 * group FE, lumped inner mass, signed power, copied boundary v. */
RAPM_API void rapm_solver_options_default(rapm_solver_options* options);

/* Element solve of the nonlinear phase. On RAPM_ERR_NONFINITE_STATE, *out
 * (if non-null) receives a surface holding only the last finite state. */
RAPM_API rapm_status rapm_solve(const rapm_params* params, const rapm_solver_options* options,
                                rapm_surface** out);
/* Finite-difference reference solve (order, nonlinearity, mass ignored). */
RAPM_API rapm_status rapm_solve_fdm(const rapm_params* params,
                                    const rapm_solver_options* options, rapm_surface** out);
RAPM_API void rapm_surface_destroy(rapm_surface* surface);

RAPM_API size_t rapm_surface_node_count(const rapm_surface* surface);
RAPM_API size_t rapm_surface_level_count(const rapm_surface* surface);
RAPM_API rapm_status rapm_surface_nodes(const rapm_surface* surface, double* x, size_t len);
RAPM_API rapm_status rapm_surface_tau(const rapm_surface* surface, size_t level, double* out);
RAPM_API rapm_status rapm_surface_u(const rapm_surface* surface, size_t level, double* u,
                                    size_t len);
RAPM_API rapm_status rapm_surface_v(const rapm_surface* surface, size_t level, double* v,
                                    size_t len);
RAPM_API rapm_status rapm_surface_diagnostics(const rapm_surface* surface,
                                              rapm_diagnostics* out);
/* V(S, t = 0). */
RAPM_API rapm_status rapm_surface_price(const rapm_surface* surface, double spot, double* out);
/* V(S, t); closed-form Black-Scholes once t >= t*. */
RAPM_API rapm_status rapm_surface_price_at(const rapm_surface* surface, double spot,
                                           double time, double* out);

#ifdef __cplusplus
}
#endif

#endif /* RAPM_RAPM_H */
