"""Random polynomial vector fields with exact derivatives, for oracle checks."""
import numpy as np
from numpy.polynomial import polynomial as P


class PolyField:
    def __init__(self, cx, cy):
        self.c = [np.atleast_2d(cx), np.atleast_2d(cy)]
        self.d = [[P.polyder(ci, axis=a) for a in (0, 1)] for ci in self.c]

    @classmethod
    def random(cls, rng, degree):
        cs = []
        for _ in range(2):
            c = rng.standard_normal((degree + 1, degree + 1))
            i, j = np.indices(c.shape)
            c[i + j > degree] = 0.0
            cs.append(c)
        return cls(*cs)

    def __call__(self, p):
        return np.stack([P.polyval2d(p[..., 0], p[..., 1], ci) for ci in self.c], -1)

    def grad(self, p):
        g = [[P.polyval2d(p[..., 0], p[..., 1], self.d[i][a]) for a in (0, 1)] for i in range(2)]
        return np.stack([np.stack(row, -1) for row in g], -2)

    def strain(self, p):
        g = self.grad(p)
        return 0.5 * (g + np.swapaxes(g, -1, -2))

    def div(self, p):
        g = self.grad(p)
        return g[..., 0, 0] + g[..., 1, 1]
