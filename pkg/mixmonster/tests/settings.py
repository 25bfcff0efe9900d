# Seed shared by the statistical tests. Every test derives its own stream
# from it, so tests do not influence each other.
SEED = 20170619

# Monte Carlo sizes. The tolerances in the tests are set at four or more
# standard errors for these sizes; lowering them makes the suite flaky.
MC_SAMPLES = 100000
SUM_REPLICATIONS = 20000
BLOCKING_REPLICATIONS = 4000
HARNESS_REPLICATIONS = 2000
VARIANCE_REPLICATIONS = 2000
AR1_REPLICATIONS = 10000
