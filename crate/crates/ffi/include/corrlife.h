#ifndef CORRLIFE_H
#define CORRLIFE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. The first four match the CLI exit codes.
 */
typedef enum CorrlifeStatus {
  CORRLIFE_STATUS_OK = 0,
  CORRLIFE_STATUS_USAGE = 1,
  CORRLIFE_STATUS_DATA = 2,
  CORRLIFE_STATUS_INVARIANT = 3,
  CORRLIFE_STATUS_NULL_POINTER = 4,
  CORRLIFE_STATUS_BUFFER_TOO_SMALL = 5,
  CORRLIFE_STATUS_PANIC = 6,
} CorrlifeStatus;

typedef enum CorrlifeLevel {
  CORRLIFE_LEVEL_STRONG = 0,
  CORRLIFE_LEVEL_WEAK = 1,
  CORRLIFE_LEVEL_NEGATIVE = 2,
  CORRLIFE_LEVEL_UNDEFINED = 3,
} CorrlifeLevel;

/**
 * Aligned log-return panel.
 */
typedef struct CorrlifePanel CorrlifePanel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *corrlife_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *corrlife_version(void);

/**
 * Pearson correlation of two series of length `len`. A constant series
 * yields NaN with status OK.
 *
 * # Safety
 * `x` and `y` must point to `len` readable doubles.
 */
enum CorrlifeStatus corrlife_pearson(const double *x, const double *y, size_t len, double *out_rho);

/**
 * Correlation distance `sqrt(2 (1 - rho))`.
 *
 * # Safety
 * `out_distance` must be writable.
 */
enum CorrlifeStatus corrlife_distance(double rho, double *out_distance);

/**
 * Level of a coefficient; NaN is UNDEFINED.
 */
enum CorrlifeLevel corrlife_classify(double rho, double strong_threshold);

/**
 * Builds a panel from a row-major `n_tickers x len` block of log-returns.
 * `tickers` may be NULL, in which case names `T0`, `T1`, ... are used.
 *
 * # Safety
 * `returns` must hold `n_tickers * len` doubles; `tickers`, when not NULL,
 * must hold `n_tickers` NUL-terminated strings; `out_panel` must be writable.
 */
enum CorrlifeStatus corrlife_panel_from_returns(const double *returns,
                                                size_t n_tickers,
                                                size_t len,
                                                const char *const *tickers,
                                                struct CorrlifePanel **out_panel);

/**
 * Loads prices from a long-format CSV or a directory of per-ticker CSVs,
 * aligns them with `align` (`"intersect"` or `"ffill:N"`; NULL means
 * intersect) and converts to log-returns.
 *
 * # Safety
 * `path` and `align` must be NUL-terminated strings (or NULL for `align`);
 * `out_panel` must be writable.
 */
enum CorrlifeStatus corrlife_panel_load(const char *path,
                                        const char *align,
                                        struct CorrlifePanel **out_panel);

/**
 * Synthetic market: `n_tickers` series with pairwise correlation `rho`,
 * daily volatility `volatility` and `length` price days (so `length - 1`
 * returns), fully determined by `seed`.
 *
 * # Safety
 * `out_panel` must be writable.
 */
enum CorrlifeStatus corrlife_panel_synthetic(size_t n_tickers,
                                             double rho,
                                             double volatility,
                                             size_t length,
                                             uint64_t seed,
                                             struct CorrlifePanel **out_panel);

/**
 * Releases a panel. NULL is ignored.
 *
 * # Safety
 * `panel` must come from one of the constructors and not be freed twice.
 */
void corrlife_panel_free(struct CorrlifePanel *panel);

/**
 * Number of tickers, or 0 for NULL.
 *
 * # Safety
 * `panel` must be NULL or a live handle.
 */
size_t corrlife_panel_tickers(const struct CorrlifePanel *panel);

/**
 * Number of return observations, or 0 for NULL.
 *
 * # Safety
 * `panel` must be NULL or a live handle.
 */
size_t corrlife_panel_len(const struct CorrlifePanel *panel);

/**
 * Full-period correlation matrix, row-major into `out` (`n * n` values).
 *
 * # Safety
 * `panel` must be a live handle; `out` must hold `out_len` doubles.
 */
enum CorrlifeStatus corrlife_correlation_matrix(const struct CorrlifePanel *panel,
                                                double *out,
                                                size_t out_len);

/**
 * Mean strong-correlation lifetime of pair `(i, j)` for each of the
 * `n_widths` window widths (step 1), in trading days.
 *
 * # Safety
 * `panel` must be a live handle; `widths` must hold `n_widths` values and
 * `out` `out_len` doubles.
 */
enum CorrlifeStatus corrlife_mltc_curve(const struct CorrlifePanel *panel,
                                        size_t i,
                                        size_t j,
                                        const size_t *widths,
                                        size_t n_widths,
                                        double strong_threshold,
                                        double *out,
                                        size_t out_len);

/**
 * Mean and population standard deviation of the per-pair mean lifetimes
 * across all pairs at one window width.
 *
 * # Safety
 * `panel` must be a live handle; both outputs must be writable.
 */
enum CorrlifeStatus corrlife_portfolio_mltc(const struct CorrlifePanel *panel,
                                            size_t width,
                                            double strong_threshold,
                                            double *out_mean,
                                            double *out_stddev);

/**
 * Half-life, in trading days, of edges in the rolling minimum spanning
 * trees. `out_found` is set to 0 when the survival ratio never falls to 1/2.
 *
 * # Safety
 * `panel` must be a live handle; both outputs must be writable.
 */
enum CorrlifeStatus corrlife_tree_half_life(const struct CorrlifePanel *panel,
                                            size_t width,
                                            size_t step,
                                            size_t *out_half_life,
                                            int32_t *out_found);

/**
 * Measured correlation of two asynchronously traded stocks with true
 * correlation `rho`, for each sampling interval in minutes (390-minute days).
 * Intervals with too few samples give NaN.
 *
 * # Safety
 * `intervals` must hold `n_intervals` doubles and `out` `out_len` doubles.
 */
enum CorrlifeStatus corrlife_epps(double rho,
                                  double trade_intensity,
                                  const double *intervals,
                                  size_t n_intervals,
                                  double horizon_days,
                                  uint64_t seed,
                                  double *out,
                                  size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORRLIFE_H */
