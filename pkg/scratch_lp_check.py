"""Dev scratch: fuzz the simplex core against scipy.optimize.linprog."""
import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from aura5g.lp import LE, EQ, GE, LinearProgram, LpStatus, solve_lp

rng = np.random.default_rng(0)

def random_lp(rng, m, n, density=0.5, eq_frac=0.2, ge_frac=0.3):
    a = sp.random(m, n, density=density, random_state=np.random.RandomState(int(rng.integers(1 << 31))), format="csr")
    a.data = rng.normal(0, 2, size=a.data.shape)
    c = rng.normal(0, 1, n)
    senses = np.full(m, LE)
    u = rng.random(m)
    senses[u < eq_frac] = EQ
    senses[(u >= eq_frac) & (u < eq_frac + ge_frac)] = GE
    lower = np.zeros(n)
    upper = np.where(rng.random(n) < 0.8, 1.0, rng.uniform(1, 5, n))
    # rhs chosen around a random feasible-ish point half the time
    if rng.random() < 0.6:
        z = rng.uniform(lower, upper)
        az = a @ z
        rhs = az + np.where(senses == LE, rng.uniform(0, 1, m), np.where(senses == GE, -rng.uniform(0, 1, m), 0.0))
    else:
        rhs = rng.normal(0, 1, m)
    return LinearProgram(c=c, a=a, senses=senses, rhs=rhs, lower=lower, upper=upper)

def scipy_solve(lp):
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    A = lp.a.toarray()
    for r in range(lp.n_rows):
        if lp.senses[r] == LE:
            A_ub.append(A[r]); b_ub.append(lp.rhs[r])
        elif lp.senses[r] == GE:
            A_ub.append(-A[r]); b_ub.append(-lp.rhs[r])
        else:
            A_eq.append(A[r]); b_eq.append(lp.rhs[r])
    res = linprog(-lp.c, A_ub=np.array(A_ub) if A_ub else None, b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=np.array(A_eq) if A_eq else None, b_eq=np.array(b_eq) if b_eq else None,
                  bounds=list(zip(lp.lower, lp.upper)), method="highs")
    return res

bad = 0
for trial in range(400):
    m = int(rng.integers(1, 25)); n = int(rng.integers(1, 25))
    lp = random_lp(rng, m, n)
    mine = solve_lp(lp)
    ref = scipy_solve(lp)
    if ref.status == 0:
        ref_obj = -ref.fun
        if mine.status is not LpStatus.OPTIMAL:
            print(f"[{trial}] scipy optimal {ref_obj:.6f}, mine {mine.status}"); bad += 1; continue
        if abs(mine.objective - ref_obj) > 1e-6 * max(1, abs(ref_obj)):
            print(f"[{trial}] obj mismatch mine={mine.objective:.8f} scipy={ref_obj:.8f}"); bad += 1
        # feasibility of my x
        x = mine.x
        az = lp.a @ x
        viol = np.max(np.concatenate([
            np.where(lp.senses == LE, az - lp.rhs, 0),
            np.where(lp.senses == GE, lp.rhs - az, 0),
            np.where(lp.senses == EQ, np.abs(az - lp.rhs), 0)]))
        if viol > 1e-6:
            print(f"[{trial}] primal violation {viol:.2e}"); bad += 1
    elif ref.status == 2:
        if mine.status is not LpStatus.INFEASIBLE:
            print(f"[{trial}] scipy infeasible, mine {mine.status} obj={mine.objective}"); bad += 1
    elif ref.status == 3:
        if mine.status is not LpStatus.UNBOUNDED:
            print(f"[{trial}] scipy unbounded, mine {mine.status}"); bad += 1
print("cold fuzz done, bad =", bad)

# warm-start fuzz: solve, then change one variable's bounds to fix it, re-solve warm vs scipy
bad = 0
for trial in range(300):
    m = int(rng.integers(2, 20)); n = int(rng.integers(2, 20))
    lp = random_lp(rng, m, n)
    first = solve_lp(lp)
    if first.status is not LpStatus.OPTIMAL:
        continue
    j = int(rng.integers(0, n))
    fix = float(rng.integers(0, 2)) * min(1.0, lp.upper[j])
    lp2 = LinearProgram(c=lp.c, a=lp.a, senses=lp.senses, rhs=lp.rhs,
                        lower=lp.lower.copy(), upper=lp.upper.copy())
    lp2.lower[j] = fix; lp2.upper[j] = fix
    mine = solve_lp(lp2, warm=first.basis)
    ref = scipy_solve(lp2)
    if ref.status == 0:
        ref_obj = -ref.fun
        if mine.status is not LpStatus.OPTIMAL or abs(mine.objective - ref_obj) > 1e-6 * max(1, abs(ref_obj)):
            print(f"[warm {trial}] mine={mine.status}/{getattr(mine,'objective',None)} scipy={ref_obj:.8f}"); bad += 1
    elif ref.status == 2:
        if mine.status is not LpStatus.INFEASIBLE:
            print(f"[warm {trial}] scipy infeasible, mine {mine.status}"); bad += 1
print("warm fuzz done, bad =", bad)
