"""Synthetic moving-square scene shared by the CLI and acceptance tests.

A bright 8x8 square on a dark background slides right by 2 px per frame:
21 frames at 20 fps on a 64x48 sensor, so the stream spans exactly 1 s
and a 100 ms ECM window yields 10 bins covering frames 0..19.
"""

import os

import numpy as np

from evtkit.pgm import write_pgm

WIDTH, HEIGHT = 64, 48
FPS = 20.0
NUM_FRAMES = 21
BG, FG = 60.0, 200.0
SQUARE = 8
TOP = 20
SPEED = 2  # px per frame
WINDOW_US = 100_000


def square_left(frame_index):
    return 2 + SPEED * frame_index


def square_frame(frame_index):
    img = np.full((HEIGHT, WIDTH), BG)
    left = square_left(frame_index)
    img[TOP:TOP + SQUARE, left:left + SQUARE] = FG
    return img


def frames():
    return [square_frame(k) for k in range(NUM_FRAMES)]


def write_frame_dir(directory):
    os.makedirs(directory, exist_ok=True)
    for k, img in enumerate(frames()):
        write_pgm(img.astype(np.uint8), os.path.join(directory,
                                                     f"frame_{k:04d}.pgm"))
    return directory


def gt_csv_rows():
    """VisDrone-style rows: one tracked square per frame."""
    return [
        f"{k},1,{square_left(k)},{TOP},{SQUARE},{SQUARE},1,1,0,0"
        for k in range(NUM_FRAMES)
    ]


def gt_box_for_bin(bin_index):
    """After alignment the surviving box is the bin's latest frame's."""
    left = square_left(2 * bin_index + 1)
    return (left, TOP, SQUARE, SQUARE)


def blob_detect(gray, threshold=200):
    """Bounding box of bright pixels, or None when nothing is bright."""
    ys, xs = np.nonzero(gray >= threshold)
    if len(xs) == 0:
        return None
    return (float(xs.min()), float(ys.min()),
            float(xs.max() - xs.min() + 1), float(ys.max() - ys.min() + 1))


def detections_csv_rows(boxes_per_bin, score=0.9):
    """One detection row per bin, stamped with the bin's latest frame."""
    rows = []
    for bin_index, box in boxes_per_bin:
        left, top, w, h = box
        frame = 2 * bin_index + 1
        rows.append(f"{frame},{left},{top},{w},{h},{score},1")
    return rows
