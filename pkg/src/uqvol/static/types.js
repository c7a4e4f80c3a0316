/** Wire types for the uqvol render service. */
export {};
