#ifndef SURFNITSCHE_H
#define SURFNITSCHE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SnStatus {
  SN_STATUS_OK = 0,
  SN_STATUS_NULL_POINTER = 1,
  SN_STATUS_INVALID_ARGUMENT = 2,
  SN_STATUS_MESH_INVALID = 3,
  SN_STATUS_DEGENERATE_GEOMETRY = 4,
  SN_STATUS_NOT_POSITIVE_DEFINITE = 5,
  SN_STATUS_NO_CONVERGENCE = 6,
  SN_STATUS_IO = 7,
  SN_STATUS_PANIC = 8,
} SnStatus;

// Model problem selector.
typedef enum SnProblem {
  // Torus band with wavy boundaries.
  SN_PROBLEM_TORUS = 0,
  // Torus band with straight boundaries.
  SN_PROBLEM_TORUS_SIMPLE = 1,
  // Unit square in z = 0 with a polynomial solution of degree k.
  SN_PROBLEM_FLAT_SQUARE = 2,
} SnProblem;

// Opaque mesh handle.
typedef struct SnMesh SnMesh;

// Opaque solution handle.
typedef struct SnSolution SnSolution;

// Geometric approximation quantities of a mesh.
typedef struct SnGeometricReport {
  double max_rho;
  double max_normal_dev;
  double max_boundary_dist;
  double max_boundary_node_dist;
  double max_conormal_dev;
  double min_scaled_jacobian;
} SnGeometricReport;

// Error norms of a discrete solution against the exact solution.
typedef struct SnErrorMeasures {
  double l2_error;
  double energy_error;
  double grad_part;
  double flux_part;
  double jump_part;
} SnErrorMeasures;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *sn_last_error_message(void);

// Builds an order-`k` mesh with `n_div` divisions; `problem` is one of the
// `SnProblem` values.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum SnStatus sn_mesh_build(uint32_t problem, uint32_t k, uint32_t n_div, struct SnMesh **out);

// Releases a mesh handle; null is ignored.
//
// # Safety
// `mesh` must be null or a handle from [`sn_mesh_build`] not yet freed.
void sn_mesh_free(struct SnMesh *mesh);

// Number of nodes (degrees of freedom); 0 for a null handle.
//
// # Safety
// `mesh` must be null or a live handle.
size_t sn_mesh_num_nodes(const struct SnMesh *mesh);

// Number of elements; 0 for a null handle.
//
// # Safety
// `mesh` must be null or a live handle.
size_t sn_mesh_num_elements(const struct SnMesh *mesh);

// Number of nodes per element, `(k + 1)(k + 2) / 2`; 0 for a null handle.
//
// # Safety
// `mesh` must be null or a live handle.
size_t sn_mesh_nodes_per_element(const struct SnMesh *mesh);

// Mesh size used in the penalty scaling; NaN for a null handle.
//
// # Safety
// `mesh` must be null or a live handle.
double sn_mesh_h(const struct SnMesh *mesh);

// Copies node coordinates as `x0 y0 z0 x1 ...` into `xyz`, which must hold
// `3 * sn_mesh_num_nodes` values.
//
// # Safety
// `mesh` must be a live handle and `xyz` valid for `len` writes.
enum SnStatus sn_mesh_nodes(const struct SnMesh *mesh, double *xyz, size_t len);

// Copies element connectivity (VTK Lagrange triangle order) into `conn`,
// which must hold `sn_mesh_num_elements * sn_mesh_nodes_per_element` values.
//
// # Safety
// `mesh` must be a live handle and `conn` valid for `len` writes.
enum SnStatus sn_mesh_elements(const struct SnMesh *mesh, uint64_t *conn, size_t len);

// Geometric approximation report of the mesh.
//
// # Safety
// `mesh` must be a live handle and `out` valid for one write.
enum SnStatus sn_mesh_report(const struct SnMesh *mesh, struct SnGeometricReport *out);

// Assembles and solves the Nitsche system with penalty `beta` to relative
// residual `rel_tol`, and measures the error of the result.
//
// # Safety
// `mesh` must be a live handle and `out` valid for one write.
enum SnStatus sn_solve(const struct SnMesh *mesh,
                       double beta,
                       double rel_tol,
                       struct SnSolution **out);

// Releases a solution handle; null is ignored.
//
// # Safety
// `solution` must be null or a handle from [`sn_solve`] not yet freed.
void sn_solution_free(struct SnSolution *solution);

// Number of solution coefficients; 0 for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
size_t sn_solution_len(const struct SnSolution *solution);

// Solver iterations (0 for a direct solve); 0 for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
size_t sn_solution_iterations(const struct SnSolution *solution);

// Recomputed relative residual of the solve; NaN for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
double sn_solution_residual(const struct SnSolution *solution);

// Copies the nodal coefficients into `values`.
//
// # Safety
// `solution` must be a live handle and `values` valid for `len` writes.
enum SnStatus sn_solution_values(const struct SnSolution *solution, double *values, size_t len);

// Error norms of the solution.
//
// # Safety
// `solution` must be a live handle and `out` valid for one write.
enum SnStatus sn_solution_errors(const struct SnSolution *solution, struct SnErrorMeasures *out);

// Library version as a static NUL-terminated string.
const char *sn_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SURFNITSCHE_H */
