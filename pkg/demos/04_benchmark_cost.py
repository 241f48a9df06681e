"""Measure the stack and evaluate the amortized cost model.

Times every operation on the 192-bit curve at ring sizes 1..6, checks
that signing and verifying scale linearly, then plugs measured numbers
into the per-message cost formula

    tau = (n*t_gM + t_gP + n*t_sM + (n/k)*t_sP + n*t_vM + t_vP) / n

where n messages share one certificate and every k-th message resends
it.  Certificates are expensive; amortization is the point.

    python3 demos/04_benchmark_cost.py
"""

from avcs import avg_cost, linearity_r2, run_benchmarks

R_MAX = 6

print(f"timing p192 at ring sizes 1..{R_MAX} (a few seconds)...")
records = run_benchmarks("p192", r_max=R_MAX, trials=5)

print()
print("op              r   median ms   scalar muls   bytes")
for rec in records:
    print(f"{rec.op:<14} {rec.ring_size:>2}   {rec.median_ms:>9.3f}   "
          f"{rec.scalar_muls:>11}   {rec.size_bytes:>5}")

print()
print(f"linearity of median latency in r: "
      f"sign R^2 = {linearity_r2(records, 'ring_sign'):.4f}, "
      f"verify R^2 = {linearity_r2(records, 'ring_verify'):.4f}")

at = {rec.op: rec for rec in records if rec.ring_size == R_MAX}
tau = avg_cost(
    100, 10,
    at["gen_message"].median_ms, at["gen_pseudonym"].median_ms,
    0.01, 0.01,  # framing is microseconds on this host
    at["verify_message"].median_ms, at["receive_cert"].median_ms,
)
print()
print(f"measured on this host (n=100 messages, k=10, r={R_MAX}):")
print(f"  certificate mint {at['gen_pseudonym'].median_ms:.2f} ms, "
      f"check {at['receive_cert'].median_ms:.2f} ms")
print(f"  amortized per-message cost tau = {tau:.3f} ms")

print()
print("amortization as the stream grows (reference embedded-hardware row):")
for n in (1, 10, 100, 1000):
    tau = avg_cost(n, 10, 2.1, 52.6, 0.5, 9.7, 6.7, 67.4)
    print(f"  n = {n:>4}: tau = {tau:7.2f} ms")
