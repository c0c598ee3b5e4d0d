"""Tour of the spherical geometry helpers.

Run: python3 demos/01_geometry.py
"""

from tripsift.geo import (
    circular_mean_deg,
    destination_point,
    haversine_m,
    initial_bearing_deg,
    mean_resultant_length,
)

# two intersections in West Lafayette, roughly a kilometer apart
A = (40.4259, -86.9081)
B = (40.4319, -86.9019)


def main() -> None:
    dist = haversine_m(*A, *B)
    brg = initial_bearing_deg(*A, *B)
    print(f"A -> B: {dist:8.1f} m at bearing {brg:6.2f} deg")

    # walk the same distance along the same bearing and land back on B
    lat, lon = destination_point(*A, brg, dist)
    print(f"forward-walked endpoint: ({lat:.6f}, {lon:.6f})")
    print(f"residual error:          {haversine_m(lat, lon, *B):.3f} m")

    print()
    print("circular means (naive arithmetic mean shown for contrast):")
    for angles in ([350.0, 10.0], [0.0, 90.0], [315.0, 45.0, 0.0]):
        naive = sum(angles) / len(angles)
        mean = circular_mean_deg(angles)
        rho = mean_resultant_length(angles)
        print(f"  {str(angles):24s} mean {mean:6.1f} deg  "
              f"(naive {naive:6.1f}), resultant length {rho:.3f}")


if __name__ == "__main__":
    main()
