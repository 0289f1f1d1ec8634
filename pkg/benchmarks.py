from timeit import timeit
import math

iterations = 20000


common_setup = "import numpy as np; from photonlink import detect, metric, trellis; "
counts_setup = "rng = np.random.default_rng(18); counts = rng.poisson(rng.integers(0, 2, 100000) * 20 + 1).tolist(); "


def print_result_from_timeit(stmt='pass', setup='pass', number=1000000):
    """
    Clean function to know how much time took the execution of one statement
    """
    units = ["s", "ms", "us", "ns"]
    duration = timeit(stmt, setup, number=int(number))
    avg_duration = duration / float(number)
    thousands = int(math.floor(math.log(avg_duration, 1000)))

    print("Total time: {:f}s. Average run: {:.3f}{}.".format(
        duration, avg_duration * (1000 ** -thousands), units[-thousands]))


print('Test metric.log_metric')
print_result_from_timeit('metric.log_metric(metric.WindowStats(12, 250), 1.0)',
                         common_setup, number=iterations * 10)

# per-step trellis cost should not grow with l_m
for l_m in (1, 8, 64, 512):
    print('Test TrellisDecoder.step for l_m=%d' % l_m)
    print('-------------------------------')
    print_result_from_timeit('for c in counts[:10000]: decoder.step(c)',
                             common_setup + counts_setup
                             + 'decoder = trellis.TrellisDecoder(trellis.TrellisConfig(%d), 1.0)' % l_m,
                             number=5)

for length in (2, 8, 32, 128):
    print('Test detect.msd_detect for L=%d' % length)
    print('-------------------------------')
    print_result_from_timeit('detect.msd_detect(counts[:%d], 1.0)' % length,
                             common_setup + counts_setup, number=iterations / 10)

for length in (2, 8, 32, 128):
    print('Test detect.msd_detect_blocks, 1000 blocks of L=%d' % length)
    print('-------------------------------')
    print_result_from_timeit('detect.msd_detect_blocks(blocks, 1.0)',
                             common_setup + counts_setup
                             + 'blocks = np.array(counts[:%d]).reshape(1000, %d)' % (1000 * length, length),
                             number=20)

for length in (4, 8, 12, 16):
    print('Test detect.brute_force_detect for L=%d' % length)
    print('-------------------------------')
    print_result_from_timeit('detect.brute_force_detect(counts[:%d], 1.0)' % length,
                             common_setup + counts_setup, number=20)
