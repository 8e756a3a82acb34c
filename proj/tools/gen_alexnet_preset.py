#!/usr/bin/env python3
"""Regenerates the frozen AlexNet layer table in include/coinfer/model_graph.hpp.

Two-group AlexNet, 227x227x3 input, 1000 classes. Max-pooling and LRN are folded
into the preceding conv layer, so each layer's input is the pooled output of
the previous one.
"""


def conv(h_in, c_in, k, c_out, stride, pad, groups):
    h_out = (h_in + 2 * pad - k) // stride + 1
    maccs = h_out * h_out * c_out * k * k * (c_in // groups)
    params = c_out * (k * k * (c_in // groups) + 1)
    return h_out, maccs, params


def pool(h):
    return (h - 3) // 2 + 1


def main():
    rows = []
    h, c = 227, 3
    spec = [  # name, kernel, c_out, stride, pad, groups, pooled
        ("conv1", 11, 96, 4, 0, 1, True),
        ("conv2", 5, 256, 1, 2, 2, True),
        ("conv3", 3, 384, 1, 1, 1, False),
        ("conv4", 3, 384, 1, 1, 2, False),
        ("conv5", 3, 256, 1, 1, 2, True),
    ]
    for name, k, c_out, s, p, g, pooled in spec:
        inputs = h * h * c
        h, maccs, params = conv(h, c, k, c_out, s, p, g)
        c = c_out
        if pooled:
            h = pool(h)
        rows.append((name, maccs, inputs, params))
    width = h * h * c
    for name, out in (("fc6", 4096), ("fc7", 4096), ("fc8", 1000)):
        rows.append((name, width * out, width, width * out + out))
        width = out
    for name, maccs, inputs, params in rows:
        print(f'    {{"{name}", {maccs}.0, {inputs}.0, {params}.0}},')
    print(f"// output values: {width}")
    print(f"// total parameters: {sum(r[3] for r in rows)}")


if __name__ == "__main__":
    main()
