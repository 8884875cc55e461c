/**
 * Spontaneous magnetization reference value for the figure guide lines:
 * zero up to the critical coupling, (1 - sinh(2*beta)^-4)^(1/8) above it.
 */

export const BETA_CRITICAL = Math.log(1 + Math.SQRT2) / 2;

export function onsagerMagnetization(beta: number): number {
  if (!(beta > 0)) {
    throw new Error(`beta must be positive, got ${beta}`);
  }
  if (beta <= BETA_CRITICAL) {
    return 0;
  }
  return Math.pow(1 - Math.pow(Math.sinh(2 * beta), -4), 1 / 8);
}
