import { defineConfig } from 'vitest/config';

// Dev server forwards API calls to the python service so the SPA can run
// same-origin. In production the built bundle is served by whatever sits
// in front of the service; the client only ever uses relative paths.
const API = 'http://127.0.0.1:8765';

export default defineConfig({
  server: {
    proxy: {
      '/colorize': API,
      '/enhance': API,
      '/rescale': API,
      '/rank': API,
      '/jobs': API,
      '/healthz': API,
    },
  },
  test: {
    environment: 'jsdom',
    include: ['test/**/*.test.ts'],
  },
});
