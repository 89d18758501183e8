from threadpoolctl import threadpool_limits

# Many small factorizations per tick; multithreaded BLAS only adds
# scheduling jitter at these sizes.
_LIMITER = threadpool_limits(limits=1)
