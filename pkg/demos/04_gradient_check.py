"""Checking hand-written gradients against finite differences.

Every gradient in the package is derived by hand, so each model is checked
by central differences on a toy graph. A deliberately scaled gradient shows
that the checker notices a 1% error.
"""

from aegcn.harness import format_gradcheck, gradcheck

report = gradcheck()
print(format_gradcheck(report))
print("\nall cases pass:", all(case["passed"] for case in report))

# Scale the channel-weight gradient by 1.01 and check again.
(bad,) = gradcheck([("hetero", "s", 1)], corrupt={"channel_weights": 1.01})
print("\nwith a 1% error injected into channel_weights:")
print(format_gradcheck([bad]))
