"""Reference WER tables used as regression fixtures.

Per-SNR WER (percent) of seven training methods of a large-vocabulary
recognizer, measured against pink and babble noise at 16 conditions (clean
plus 50 dB down to -20 dB in 5 dB steps), together with the published
range means (full / high / low / roi). The range means were computed from
unrounded WERs before publication, so recomputing them from the rounded
per-SNR entries can drift by up to ~0.07 absolute for a couple of rows.
"""

CONDITIONS = ["clean"] + [float(v) for v in range(50, -25, -5)]

METHODS = (
    "clean_baseline",
    "noisy_baseline",
    "gauss",
    "vanilla_pem",
    "gauss_pem",
    "accan",
    "accan_reversed",
)

# method -> list of 16 WER values ordered like CONDITIONS
PINK_BY_SNR = {
    "clean_baseline": [13.8, 14.4, 14.0, 13.8, 13.7, 13.7, 16.1, 18.9,
                       25.9, 40.1, 61.8, 86.4, 109.0, 133.4, 147.2, 152.8],
    "noisy_baseline": [17.3, 17.4, 17.3, 16.9, 16.5, 16.4, 16.2, 16.8,
                       19.0, 23.4, 36.5, 59.8, 90.0, 116.2, 126.7, 129.5],
    "gauss":          [15.7, 15.8, 15.7, 15.6, 14.8, 14.4, 14.5, 15.3,
                       16.9, 20.2, 28.9, 45.5, 72.8, 94.9, 99.0, 98.9],
    "vanilla_pem":    [13.3, 13.2, 13.2, 12.7, 12.6, 12.6, 12.9, 13.6,
                       15.1, 18.9, 26.2, 45.0, 73.5, 93.4, 96.9, 97.1],
    "gauss_pem":      [13.6, 13.5, 13.6, 13.4, 13.2, 12.6, 12.4, 12.8,
                       14.2, 17.0, 22.3, 37.6, 66.3, 90.2, 95.9, 96.8],
    "accan":          [15.9, 15.8, 15.4, 15.3, 15.0, 15.0, 15.2, 15.9,
                       16.1, 18.5, 22.9, 33.7, 58.8, 85.9, 95.6, 96.2],
    "accan_reversed": [14.6, 14.4, 14.3, 14.1, 13.3, 13.4, 13.9, 14.4,
                       15.4, 18.5, 24.4, 40.2, 67.8, 90.9, 97.0, 97.2],
}

BABBLE_BY_SNR = {
    "clean_baseline": [13.8, 14.2, 14.2, 13.9, 14.2, 14.5, 15.7, 18.8,
                       26.6, 43.9, 74.2, 102.2, 116.6, 122.4, 122.3, 121.4],
    "noisy_baseline": [17.3, 17.1, 16.9, 16.7, 16.1, 15.7, 15.8, 17.8,
                       23.1, 35.5, 60.6, 94.1, 119.4, 128.4, 129.3, 129.2],
    "gauss":          [15.7, 15.6, 15.7, 15.7, 15.3, 15.0, 15.4, 16.5,
                       19.5, 27.5, 45.9, 77.4, 102.6, 109.0, 109.8, 110.6],
    "vanilla_pem":    [13.3, 13.2, 12.9, 12.7, 12.3, 12.7, 12.8, 14.0,
                       17.4, 25.6, 44.2, 72.7, 93.2, 99.1, 99.5, 99.8],
    "gauss_pem":      [13.6, 13.8, 13.7, 13.4, 13.4, 13.3, 13.7, 14.6,
                       16.9, 22.9, 37.4, 64.1, 89.8, 97.3, 97.3, 97.4],
    "accan":          [15.9, 15.7, 15.3, 14.9, 15.1, 15.1, 15.0, 15.5,
                       17.5, 21.8, 33.4, 57.2, 86.1, 97.2, 98.8, 99.1],
    "accan_reversed": [14.6, 14.4, 14.2, 14.0, 14.1, 14.0, 14.0, 14.6,
                       16.5, 21.9, 35.5, 63.5, 88.7, 96.6, 97.6, 97.6],
}

# method -> (full, high, low, roi), as published
PINK_RANGES = {
    "clean_baseline": (54.7, 29.0, 109.6, 67.9),
    "noisy_baseline": (46.0, 23.3, 88.6, 51.7),
    "gauss":          (37.4, 19.8, 71.1, 42.1),
    "vanilla_pem":    (35.6, 17.8, 70.6, 40.8),
    "gauss_pem":      (34.1, 16.6, 64.7, 37.2),
    "accan":          (34.4, 18.1, 59.5, 36.0),
    "accan_reversed": (35.2, 17.8, 66.3, 38.8),
}

BABBLE_RANGES = {
    "clean_baseline": (53.0, 32.0, 113.7, 72.1),
    "noisy_baseline": (53.3, 29.9, 114.0, 68.4),
    "gauss":          (45.4, 25.4, 96.3, 56.9),
    "vanilla_pem":    (41.0, 22.8, 88.3, 52.3),
    "gauss_pem":      (39.5, 21.6, 83.7, 49.0),
    "accan":          (39.6, 21.5, 80.2, 47.0),
    "accan_reversed": (39.5, 21.5, 82.9, 48.2),
}


def points_for(table: dict, method: str) -> dict:
    return dict(zip(CONDITIONS, table[method]))
