/** Payload shapes of the service's JSON endpoints. */
export const CLASS_NAMES = ["Empty", "Fluid", "Heavy", "Jam"];
